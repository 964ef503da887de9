#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pssr::img {

// Planar image: pix[(c*height + r)*width + col]. Color images keep values
// in [0,1]; disparity maps reuse the type with values in pixel units.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> pix;

  static Image create(int w, int h, int c, double fill = 0.0);

  double& at(int c, int r, int col) {
    return pix[(static_cast<size_t>(c) * height + r) * width + col];
  }
  double at(int c, int r, int col) const {
    return pix[(static_cast<size_t>(c) * height + r) * width + col];
  }
  int64_t size() const { return static_cast<int64_t>(width) * height * channels; }
  bool empty() const { return pix.empty(); }
};

bool same_shape(const Image& a, const Image& b);

// ITU-R 601 luma; identity for single-channel images.
Image to_gray(const Image& rgb);

Image crop(const Image& src, int r0, int c0, int h, int w);

struct StereoPair {
  Image left;
  Image right;
  std::optional<Image> disparity_gt;  // single channel, left-referenced, pixel units
};

void check_pair(const StereoPair& p);  // dimension/channel agreement

// Regular anchor grid; the last row/column anchor is clamped so the final
// patch ends exactly at the image border.
struct PatchGrid {
  int size = 0;
  int stride = 0;
  std::vector<std::pair<int, int>> anchors;  // (row, col)
};

PatchGrid make_patch_grid(int width, int height, int size, int stride);

std::vector<StereoPair> extract_patches(const StereoPair& pair, int size, int stride);

StereoPair crop_pair(const StereoPair& pair, int r0, int c0, int h, int w);

// Largest centered crop whose sides are multiples of `multiple`.
StereoPair crop_to_multiple(const StereoPair& pair, int multiple);

}  // namespace pssr::img
