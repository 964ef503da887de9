#include <doctest.h>

#include <fstream>

#include "pssr/image.hpp"
#include "pssr/image_io.hpp"
#include "pssr/scene.hpp"
#include "test_helpers.hpp"

namespace img = pssr::img;
using testutil::TempDir;
using testutil::random_image;

TEST_CASE("ppm: save -> load round trip reproduces bytes") {
  TempDir tmp("ppm");
  const img::Image im = random_image(8, 8, 3, 7);
  const std::string p1 = tmp.file("a.ppm");
  const std::string p2 = tmp.file("b.ppm");
  img::save_ppm(p1, im);
  const img::Image loaded = img::load_ppm(p1);
  CHECK(loaded.width == 8);
  CHECK(loaded.height == 8);
  CHECK(loaded.channels == 3);
  img::save_ppm(p2, loaded);
  CHECK(testutil::read_binary(p1) == testutil::read_binary(p2));
  // loading again gives the identical buffer
  const img::Image again = img::load_ppm(p2);
  CHECK(again.pix == loaded.pix);
}

TEST_CASE("ppm: P6 header followed by 12 bytes is a 2x2 RGB image") {
  TempDir tmp("ppm_hdr");
  const std::string path = tmp.file("tiny.ppm");
  {
    std::ofstream os(path, std::ios::binary);
    os << "P6 2 2 255\n";
    const unsigned char payload[12] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30};
    os.write(reinterpret_cast<const char*>(payload), 12);
  }
  const img::Image im = img::load_ppm(path);
  CHECK(im.width == 2);
  CHECK(im.height == 2);
  CHECK(im.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(im.at(1, 0, 1) == doctest::Approx(1.0));
  CHECK(im.at(2, 1, 0) == doctest::Approx(1.0));
  CHECK(im.at(0, 1, 1) == doctest::Approx(10.0 / 255.0));
}

TEST_CASE("ppm: malformed header and truncated payload rejected with byte offset") {
  TempDir tmp("ppm_bad");
  {
    std::ofstream os(tmp.file("bad_magic.ppm"), std::ios::binary);
    os << "P5 2 2 255\n....";
  }
  CHECK_THROWS_WITH_AS(img::load_ppm(tmp.file("bad_magic.ppm")), doctest::Contains("P6"),
                       std::runtime_error);
  {
    std::ofstream os(tmp.file("trunc.ppm"), std::ios::binary);
    os << "P6 2 2 255\n";
    os.write("xxxxxxx", 7);  // needs 12
  }
  CHECK_THROWS_WITH_AS(img::load_ppm(tmp.file("trunc.ppm")),
                       doctest::Contains("at byte 11"), std::runtime_error);
  {
    std::ofstream os(tmp.file("bad_maxval.ppm"), std::ios::binary);
    os << "P6 2 2 65535\n";
  }
  CHECK_THROWS_WITH_AS(img::load_ppm(tmp.file("bad_maxval.ppm")), doctest::Contains("maxval"),
                       std::runtime_error);
}

TEST_CASE("pfm: float-exact round trip, little-endian scale") {
  TempDir tmp("pfm");
  img::Image disp = img::Image::create(5, 4, 1, 4.0);
  disp.at(0, 2, 3) = -1.25;
  const std::string path = tmp.file("d.pfm");
  img::save_pfm(path, disp);
  const img::Image loaded = img::load_pfm(path);
  CHECK(loaded.pix == disp.pix);

  // scale sign encodes endianness: positive (big-endian) rejected
  {
    std::ofstream os(tmp.file("be.pfm"), std::ios::binary);
    os << "Pf\n2 2\n1.0\n";
    const char zeros[16] = {};
    os.write(zeros, 16);
  }
  CHECK_THROWS_WITH_AS(img::load_pfm(tmp.file("be.pfm")), doctest::Contains("big-endian"),
                       std::runtime_error);
}

TEST_CASE("patch grid: 240/120/120 gives 4 patches") {
  const img::PatchGrid g = img::make_patch_grid(240, 240, 120, 120);
  CHECK(g.anchors.size() == 4);
}

TEST_CASE("patch grid: 130/120/120 clamps anchors to 0 and 10") {
  const img::PatchGrid g = img::make_patch_grid(130, 130, 120, 120);
  REQUIRE(g.anchors.size() == 4);
  CHECK(g.anchors[0] == std::pair<int, int>{0, 0});
  CHECK(g.anchors[1] == std::pair<int, int>{0, 10});
  CHECK(g.anchors[2] == std::pair<int, int>{10, 0});
  CHECK(g.anchors[3] == std::pair<int, int>{10, 10});
}

TEST_CASE("extract_patches: content equals the source sub-rectangle") {
  img::StereoPair pair;
  pair.left = random_image(36, 24, 3, 31);
  pair.right = random_image(36, 24, 3, 32);
  const auto patches = img::extract_patches(pair, 12, 12);
  REQUIRE(patches.size() == 6);
  // anchor (12, 24) is the [1][2] grid cell
  const img::StereoPair& p = patches[5];
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 12; ++r)
      for (int col = 0; col < 12; ++col) {
        CHECK(p.left.at(c, r, col) == pair.left.at(c, 12 + r, 24 + col));
        CHECK(p.right.at(c, r, col) == pair.right.at(c, 12 + r, 24 + col));
      }

  CHECK_THROWS_AS(img::extract_patches(pair, 37, 12), std::invalid_argument);
}

TEST_CASE("extract_patches: partition mean reproduces image mean") {
  img::StereoPair pair;
  pair.left = random_image(48, 36, 3, 41);
  pair.right = pair.left;
  const auto patches = img::extract_patches(pair, 12, 12);
  double acc = 0.0;
  for (const auto& p : patches) {
    double m = 0.0;
    for (double v : p.left.pix) m += v;
    acc += m / static_cast<double>(p.left.pix.size());
  }
  acc /= static_cast<double>(patches.size());
  double full = 0.0;
  for (double v : pair.left.pix) full += v;
  full /= static_cast<double>(pair.left.pix.size());
  CHECK(acc == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("gen_scene: determinism") {
  const img::StereoPair a = img::gen_scene(5, 96, 80, 3, 10);
  const img::StereoPair b = img::gen_scene(5, 96, 80, 3, 10);
  CHECK(a.left.pix == b.left.pix);
  CHECK(a.right.pix == b.right.pix);
  CHECK(a.disparity_gt->pix == b.disparity_gt->pix);

  const img::StereoPair c = img::gen_scene(6, 96, 80, 3, 10);
  CHECK(a.left.pix != c.left.pix);
}

TEST_CASE("gen_scene: disparity ground truth by construction") {
  // one rectangle: gt is its disparity inside, 0 outside
  const img::StereoPair s = img::gen_scene(11, 120, 90, 1, 8);
  REQUIRE(s.disparity_gt.has_value());
  double d_inside = 0.0;
  int inside = 0, outside = 0;
  for (double v : s.disparity_gt->pix) {
    if (v != 0.0) {
      if (inside == 0) d_inside = v;
      CHECK(v == d_inside);
      ++inside;
    } else {
      ++outside;
    }
  }
  CHECK(inside > 0);
  CHECK(outside > 0);
  CHECK(d_inside >= 1.0);
  CHECK(d_inside <= 8.0);
}

TEST_CASE("gen_scene: views differ only inside shifted-shape regions") {
  const img::StereoPair s = img::gen_scene(13, 120, 90, 2, 9);
  // brute-force diff mask vs the union of gt-marked and left-shifted regions
  const img::Image& gt = *s.disparity_gt;
  for (int r = 0; r < 90; ++r)
    for (int c = 0; c < 120; ++c) {
      bool differs = false;
      for (int ch = 0; ch < 3; ++ch)
        differs = differs || s.left.at(ch, r, c) != s.right.at(ch, r, c);
      if (!differs) continue;
      // a differing pixel must be covered by some shape in the left view or
      // by its shifted copy: gt > 0 here, or gt > 0 at some column to the
      // right within max disparity
      bool explained = gt.at(0, r, c) > 0.0;
      for (int d = 1; d <= 9 && !explained; ++d)
        if (c + d < 120) explained = gt.at(0, r, c + d) == d;
      CHECK(explained);
    }
}

TEST_CASE("gen_scene: precondition on disparity range") {
  CHECK_THROWS_AS(img::gen_scene(1, 40, 40, 1, 10), std::invalid_argument);  // 10 >= 40/4
  CHECK_THROWS_AS(img::gen_scene(1, 40, 40, 1, 0), std::invalid_argument);
}
