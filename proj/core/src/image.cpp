#include "pssr/image.hpp"

#include <stdexcept>

namespace pssr::img {

Image Image::create(int w, int h, int c, double fill) {
  if (w <= 0 || h <= 0 || (c != 1 && c != 3))
    throw std::invalid_argument("image: bad dimensions " + std::to_string(w) + "x" +
                                std::to_string(h) + "x" + std::to_string(c));
  Image im;
  im.width = w;
  im.height = h;
  im.channels = c;
  im.pix.assign(static_cast<size_t>(w) * h * c, fill);
  return im;
}

bool same_shape(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height && a.channels == b.channels;
}

Image to_gray(const Image& src) {
  if (src.channels == 1) return src;
  Image g = Image::create(src.width, src.height, 1);
  const size_t plane = static_cast<size_t>(src.width) * src.height;
  const double* r = src.pix.data();
  const double* gg = r + plane;
  const double* b = gg + plane;
  for (size_t i = 0; i < plane; ++i) g.pix[i] = 0.299 * r[i] + 0.587 * gg[i] + 0.114 * b[i];
  return g;
}

Image crop(const Image& src, int r0, int c0, int h, int w) {
  if (r0 < 0 || c0 < 0 || r0 + h > src.height || c0 + w > src.width)
    throw std::invalid_argument("crop: window " + std::to_string(w) + "x" + std::to_string(h) +
                                " at (" + std::to_string(r0) + "," + std::to_string(c0) +
                                ") exceeds image " + std::to_string(src.width) + "x" +
                                std::to_string(src.height));
  Image out = Image::create(w, h, src.channels);
  for (int c = 0; c < src.channels; ++c)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) out.at(c, r, col) = src.at(c, r0 + r, c0 + col);
  return out;
}

void check_pair(const StereoPair& p) {
  if (!same_shape(p.left, p.right))
    throw std::invalid_argument("stereo pair: left " + std::to_string(p.left.width) + "x" +
                                std::to_string(p.left.height) + "x" +
                                std::to_string(p.left.channels) + " vs right " +
                                std::to_string(p.right.width) + "x" +
                                std::to_string(p.right.height) + "x" +
                                std::to_string(p.right.channels));
  if (p.disparity_gt &&
      (p.disparity_gt->width != p.left.width || p.disparity_gt->height != p.left.height))
    throw std::invalid_argument("stereo pair: disparity map dims do not match left view");
}

namespace {

std::vector<int> axis_anchors(int dim, int size, int stride) {
  std::vector<int> a;
  for (int x = 0; x + size <= dim; x += stride) a.push_back(x);
  if (a.empty() || a.back() + size < dim) a.push_back(dim - size);
  return a;
}

}  // namespace

PatchGrid make_patch_grid(int width, int height, int size, int stride) {
  if (size <= 0 || stride <= 0) throw std::invalid_argument("patch grid: size and stride must be positive");
  if (size > width || size > height)
    throw std::invalid_argument("patch grid: patch size " + std::to_string(size) +
                                " exceeds image " + std::to_string(width) + "x" +
                                std::to_string(height));
  PatchGrid g;
  g.size = size;
  g.stride = stride;
  const auto rows = axis_anchors(height, size, stride);
  const auto cols = axis_anchors(width, size, stride);
  for (int r : rows)
    for (int c : cols) g.anchors.emplace_back(r, c);
  return g;
}

StereoPair crop_pair(const StereoPair& pair, int r0, int c0, int h, int w) {
  StereoPair out;
  out.left = crop(pair.left, r0, c0, h, w);
  out.right = crop(pair.right, r0, c0, h, w);
  if (pair.disparity_gt) out.disparity_gt = crop(*pair.disparity_gt, r0, c0, h, w);
  return out;
}

std::vector<StereoPair> extract_patches(const StereoPair& pair, int size, int stride) {
  check_pair(pair);
  PatchGrid grid = make_patch_grid(pair.left.width, pair.left.height, size, stride);
  std::vector<StereoPair> out;
  out.reserve(grid.anchors.size());
  for (auto [r, c] : grid.anchors) out.push_back(crop_pair(pair, r, c, size, size));
  return out;
}

StereoPair crop_to_multiple(const StereoPair& pair, int multiple) {
  check_pair(pair);
  if (multiple <= 0) throw std::invalid_argument("crop_to_multiple: multiple must be positive");
  const int w = pair.left.width - pair.left.width % multiple;
  const int h = pair.left.height - pair.left.height % multiple;
  if (w == 0 || h == 0)
    throw std::invalid_argument("crop_to_multiple: image smaller than multiple " +
                                std::to_string(multiple));
  if (w == pair.left.width && h == pair.left.height) return pair;
  return crop_pair(pair, (pair.left.height - h) / 2, (pair.left.width - w) / 2, h, w);
}

}  // namespace pssr::img
