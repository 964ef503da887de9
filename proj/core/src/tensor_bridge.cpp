#include "pssr/tensor_bridge.hpp"

#include <algorithm>
#include <stdexcept>

namespace pssr::img {

ad::Tensor to_tensor(const Image& im, bool requires_grad) {
  return batch_to_tensor({&im}, requires_grad);
}

ad::Tensor batch_to_tensor(const std::vector<const Image*>& views, bool requires_grad) {
  if (views.empty()) throw std::invalid_argument("batch_to_tensor: empty batch");
  const Image& first = *views[0];
  for (const Image* v : views)
    if (!same_shape(first, *v))
      throw std::invalid_argument("batch_to_tensor: mixed image shapes in batch");
  const int64_t per = first.size();
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(per) * views.size());
  for (const Image* v : views) vals.insert(vals.end(), v->pix.begin(), v->pix.end());
  return ad::Tensor::from(
      {static_cast<int>(views.size()), first.channels, first.height, first.width},
      std::move(vals), requires_grad);
}

Image from_tensor(const ad::Tensor& t, int batch_index, bool clamp01) {
  if (t.rank() != 4)
    throw std::invalid_argument("from_tensor: expected [N,C,H,W], got " + ad::shape_str(t.shape()));
  const int c = t.dim(1), h = t.dim(2), w = t.dim(3);
  if (batch_index < 0 || batch_index >= t.dim(0))
    throw std::invalid_argument("from_tensor: batch index out of range");
  Image im = Image::create(w, h, c);
  const double* src = t.values().data() + static_cast<int64_t>(batch_index) * c * h * w;
  std::copy(src, src + im.size(), im.pix.begin());
  if (clamp01)
    for (double& v : im.pix) v = std::clamp(v, 0.0, 1.0);
  return im;
}

}  // namespace pssr::img
