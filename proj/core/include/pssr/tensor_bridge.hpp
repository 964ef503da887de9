#pragma once

#include "pssr/image.hpp"
#include "pssr/tensor.hpp"

namespace pssr::img {

// Image <-> tensor conversions (NCHW). Values copy exactly; no rescaling.
ad::Tensor to_tensor(const Image& im, bool requires_grad = false);
ad::Tensor batch_to_tensor(const std::vector<const Image*>& views, bool requires_grad = false);
Image from_tensor(const ad::Tensor& t, int batch_index = 0, bool clamp01 = false);

}  // namespace pssr::img
