#include "pssr/scene.hpp"

#include <algorithm>
#include <stdexcept>

#include "pssr/rng.hpp"

namespace pssr::img {

namespace {

struct Rect {
  int x0, y0, w, h, disparity;
};

bool overlaps(const Rect& a, const Rect& b, int margin) {
  return a.x0 - margin < b.x0 + b.w && b.x0 - margin < a.x0 + a.w && a.y0 < b.y0 + b.h &&
         b.y0 < a.y0 + a.h;
}

}  // namespace

StereoPair gen_scene(uint64_t seed, int width, int height, int n_shapes, int max_disparity) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("gen_scene: non-positive dimensions");
  if (n_shapes < 0) throw std::invalid_argument("gen_scene: negative shape count");
  if (max_disparity < 1 || max_disparity >= width / 4)
    throw std::invalid_argument("gen_scene: max_disparity must lie in [1, width/4), got " +
                                std::to_string(max_disparity));

  // Shared background: smooth gradient plus noise texture so block matching
  // has something to lock onto everywhere.
  SplitMix64 bg_rng(derive_seed(seed, 0xBAC4C0DE));
  Image background = Image::create(width, height, 3);
  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = bg_rng.uniform(0.3, 0.6);
    gx[c] = bg_rng.uniform(-0.2, 0.2);
    gy[c] = bg_rng.uniform(-0.2, 0.2);
  }
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < height; ++r)
      for (int col = 0; col < width; ++col) {
        const double v = base[c] + gx[c] * col / width + gy[c] * r / height +
                         bg_rng.uniform(-0.12, 0.12);
        background.at(c, r, col) = std::clamp(v, 0.0, 1.0);
      }

  StereoPair pair;
  pair.left = background;
  pair.right = background;
  pair.disparity_gt = Image::create(width, height, 1, 0.0);

  // Place rectangles; retry a bounded number of times to avoid overlap so
  // the disparity ground truth stays exact under occlusion-free layout.
  SplitMix64 place_rng(derive_seed(seed, 0x5A7E5));
  std::vector<Rect> rects;
  for (int s = 0; s < n_shapes; ++s) {
    Rect rect{};
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      rect.disparity = 1 + place_rng.uniform_int(max_disparity);
      rect.w = std::max(4, width / 8 + place_rng.uniform_int(std::max(1, width / 4)));
      rect.h = std::max(4, height / 8 + place_rng.uniform_int(std::max(1, height / 4)));
      rect.w = std::min(rect.w, width - rect.disparity - 1);
      rect.h = std::min(rect.h, height - 1);
      rect.x0 = rect.disparity + place_rng.uniform_int(std::max(1, width - rect.w - rect.disparity));
      rect.y0 = place_rng.uniform_int(std::max(1, height - rect.h));
      placed = true;
      for (const Rect& other : rects)
        if (overlaps(rect, other, max_disparity)) {
          placed = false;
          break;
        }
    }
    rects.push_back(rect);  // last attempt wins even if it overlaps
  }

  for (size_t s = 0; s < rects.size(); ++s) {
    const Rect& rect = rects[s];
    SplitMix64 tex_rng(derive_seed(seed, 0x7E97, s));
    double mean[3];
    for (int c = 0; c < 3; ++c) mean[c] = tex_rng.uniform(0.15, 0.85);
    Image tex = Image::create(rect.w, rect.h, 3);
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < rect.h; ++r)
        for (int col = 0; col < rect.w; ++col)
          tex.at(c, r, col) = std::clamp(mean[c] + tex_rng.uniform(-0.15, 0.15), 0.0, 1.0);

    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < rect.h; ++r)
        for (int col = 0; col < rect.w; ++col) {
          pair.left.at(c, rect.y0 + r, rect.x0 + col) = tex.at(c, r, col);
          pair.right.at(c, rect.y0 + r, rect.x0 + col - rect.disparity) = tex.at(c, r, col);
        }
    for (int r = 0; r < rect.h; ++r)
      for (int col = 0; col < rect.w; ++col)
        pair.disparity_gt->at(0, rect.y0 + r, rect.x0 + col) = rect.disparity;
  }

  return pair;
}

}  // namespace pssr::img
