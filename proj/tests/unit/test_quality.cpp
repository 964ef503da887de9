#include <doctest.h>

#include <cmath>

#include "pssr/degradation.hpp"
#include "pssr/quality.hpp"
#include "pssr/scene.hpp"
#include "test_helpers.hpp"

namespace quality = pssr::quality;
namespace img = pssr::img;
using testutil::random_image;

TEST_CASE("psnr: identity cap, forced arithmetic, brute-force oracle") {
  const img::Image a = random_image(16, 12, 3, 1);
  CHECK(quality::psnr(a, a).value == 100.0);
  CHECK(quality::psnr(a, a).polarity == quality::Polarity::higher_better);

  img::Image b = img::Image::create(10, 10, 1, 0.2);
  img::Image c = img::Image::create(10, 10, 1, 0.3);  // uniform diff 0.1 -> 20 dB
  CHECK(quality::psnr(b, c).value == doctest::Approx(20.0).epsilon(1e-9));

  const img::Image x = random_image(9, 7, 3, 2);
  const img::Image y = random_image(9, 7, 3, 3);
  double mse = 0.0;
  for (size_t i = 0; i < x.pix.size(); ++i) mse += (x.pix[i] - y.pix[i]) * (x.pix[i] - y.pix[i]);
  mse /= static_cast<double>(x.pix.size());
  CHECK(quality::psnr(x, y).value == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));

  const img::Image z = random_image(8, 7, 3, 4);
  CHECK_THROWS_AS(quality::psnr(x, z), std::invalid_argument);
}

TEST_CASE("ssim: identity, constant-image closed form, symmetry") {
  const img::Image a = random_image(24, 20, 3, 11);
  CHECK(quality::ssim(a, a).value == doctest::Approx(1.0).epsilon(1e-12));

  // constants 0.5 vs 0.25: variances vanish, closed form
  // (2*mx*my + C1) / (mx^2 + my^2 + C1) = 0.2501 / 0.3126
  const img::Image x = img::Image::create(16, 16, 1, 0.5);
  const img::Image y = img::Image::create(16, 16, 1, 0.25);
  CHECK(quality::ssim(x, y).value == doctest::Approx(0.2501 / 0.3126).epsilon(1e-9));

  const img::Image p = random_image(20, 18, 3, 12);
  const img::Image q = random_image(20, 18, 3, 13);
  CHECK(quality::ssim(p, q).value == doctest::Approx(quality::ssim(q, p).value).epsilon(1e-12));

  const img::Image tiny = random_image(8, 8, 3, 14);
  CHECK_THROWS_AS(quality::ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("diff_map: zero for identical views, antisymmetric under swap") {
  img::StereoPair pair;
  pair.left = random_image(14, 10, 3, 21);
  pair.right = pair.left;
  for (double v : quality::diff_map(pair).pix) CHECK(v == 0.0);

  pair.right = random_image(14, 10, 3, 22);
  const img::Image d1 = quality::diff_map(pair);
  std::swap(pair.left, pair.right);
  const img::Image d2 = quality::diff_map(pair);
  for (size_t i = 0; i < d1.pix.size(); ++i) CHECK(d1.pix[i] == -d2.pix[i]);
}

TEST_CASE("diff_map: nonzero only around shifted shapes") {
  const img::StereoPair s = img::gen_scene(31, 120, 90, 1, 6);
  const img::Image d = quality::diff_map(s);
  const img::Image& gt = *s.disparity_gt;
  for (int r = 0; r < 90; ++r)
    for (int c = 0; c < 120; ++c) {
      bool nonzero = false;
      for (int ch = 0; ch < 3; ++ch) nonzero = nonzero || d.at(ch, r, c) != 0.0;
      if (!nonzero) continue;
      bool near_shape = gt.at(0, r, c) > 0.0;
      for (int k = 1; k <= 6 && !near_shape; ++k)
        if (c + k < 120) near_shape = gt.at(0, r, c + k) > 0.0;
      CHECK(near_shape);
    }
}

TEST_CASE("block matching: identical views give zero disparity") {
  img::StereoPair pair;
  pair.left = random_image(40, 30, 3, 41);
  pair.right = pair.left;
  const auto m = quality::block_match_disparity(pair, 7, 10);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (m.is_valid(r, c)) CHECK(m.at(r, c) == 0.0);
  // borders invalid
  CHECK_FALSE(m.is_valid(0, 0));
  CHECK_FALSE(m.is_valid(1, 20));
  CHECK(m.is_valid(15, 20));
}

TEST_CASE("block matching: recovers a whole-image shift on all valid interior pixels") {
  const int d_true = 5, w = 48, h = 24;
  const img::Image base = random_image(w + d_true, h, 1, 42);
  img::StereoPair pair;
  pair.left = img::Image::create(w, h, 1);
  pair.right = img::Image::create(w, h, 1);
  // left pixel c matches right pixel c - d, i.e. right(x) = left(x + d)
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      pair.left.at(0, r, c) = base.at(0, r, c);
      pair.right.at(0, r, c) = base.at(0, r, c + d_true);
    }
  const auto m = quality::block_match_disparity(pair, 5, 12);
  const int hw = 2;
  for (int r = hw; r < h - hw; ++r)
    for (int c = hw + d_true; c < w - hw; ++c) {
      REQUIRE(m.is_valid(r, c));
      CHECK(m.at(r, c) == static_cast<double>(d_true));
    }
}

TEST_CASE("block matching: rectangle scene disparity and bounds") {
  const img::StereoPair s = img::gen_scene(47, 100, 80, 1, 8);
  const auto m = quality::block_match_disparity(s, 7, 16);
  const img::Image& gt = *s.disparity_gt;
  // estimated disparity within bounds everywhere
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (m.is_valid(r, c)) {
        CHECK(m.at(r, c) >= 0.0);
        CHECK(m.at(r, c) <= 16.0);
      }
  // interior rectangle pixels (3px margin from the shape border) match gt
  double d_shape = 0.0;
  for (double v : gt.pix)
    if (v > 0.0) d_shape = v;
  int checked = 0;
  for (int r = 4; r < 76; ++r)
    for (int c = 4; c < 96; ++c) {
      bool interior = true;
      for (int dr = -3; dr <= 3 && interior; ++dr)
        for (int dc = -3; dc <= 3 && interior; ++dc)
          interior = gt.at(0, r + dr, c + dc) == d_shape;
      if (!interior || !m.is_valid(r, c)) continue;
      CHECK(m.at(r, c) == d_shape);
      ++checked;
    }
  CHECK(checked > 50);
}

TEST_CASE("epe: exact cases and direct oracle") {
  quality::DisparityMap gt;
  gt.width = 6;
  gt.height = 4;
  gt.d.assign(24, 0.0);
  gt.valid.assign(24, 1);
  pssr::SplitMix64 rng(55);
  for (double& v : gt.d) v = rng.uniform(0.0, 10.0);

  CHECK(quality::epe(gt, gt).value == 0.0);
  CHECK(quality::epe(gt, gt).polarity == quality::Polarity::lower_better);

  quality::DisparityMap shifted = gt;
  for (double& v : shifted.d) v += 1.0;
  CHECK(quality::epe(shifted, gt).value == doctest::Approx(1.0).epsilon(1e-12));

  quality::DisparityMap est = gt;
  for (double& v : est.d) v = rng.uniform(0.0, 10.0);
  est.valid[3] = 0;  // excluded coordinate
  double acc = 0.0;
  int n = 0;
  for (size_t i = 0; i < est.d.size(); ++i)
    if (est.valid[i] && gt.valid[i]) {
      acc += std::abs(est.d[i] - gt.d[i]);
      ++n;
    }
  CHECK(quality::epe(est, gt).value == doctest::Approx(acc / n).epsilon(1e-12));

  quality::DisparityMap none = gt;
  none.valid.assign(24, 0);
  CHECK_THROWS_AS(quality::epe(none, gt), std::invalid_argument);
}

TEST_CASE("psnr strictly decreases as noise grows on a fixed scene") {
  const img::StereoPair s = img::gen_scene(61, 48, 48, 2, 6);
  double prev = 1e18;
  for (double level : {0.0, 5.0, 12.0, 25.0}) {
    const img::Image noisy = pssr::deg::add_noise(s.left, level, 9);
    const double p = quality::psnr(noisy, s.left).value;
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("metric csv row format") {
  quality::MetricResult r{"psnr", 20.0, quality::Polarity::higher_better};
  CHECK(r.csv_row() == "psnr,20,higher_better");
}
