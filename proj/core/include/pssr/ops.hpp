#pragma once

#include "pssr/tensor.hpp"

namespace pssr::ad {

// Graph-building ops. Shapes follow the NCHW convention for 4-D tensors.
// Every op records a backward closure; summation orders inside forward and
// backward loops are fixed so repeated runs are bit-identical.

// input [N,Cin,H,W], weight [Cout,Cin,k,k], bias [Cout] -> [N,Cout,H',W']
// H' = floor((H + 2*pad - k)/stride) + 1, zero padding.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad);

// input [N,D], weight [D,M], bias [M] -> [N,M]
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

// max(x, slope*x); the subgradient at 0 takes the slope branch.
Tensor leaky_relu(const Tensor& input, double slope);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);

// Concatenate along the channel axis: 4-D [N,Ci,H,W] or 2-D [N,Ci].
Tensor concat_channels(const std::vector<Tensor>& parts);

// Inverse of concat_channels: channels [c0, c1) of a 2-D or 4-D tensor.
Tensor slice_channels(const Tensor& input, int c0, int c1);

// [N,C,H,W] -> [N,C]  per-channel spatial mean.
Tensor global_avg_pool(const Tensor& input);

// [N,C,H,W] -> [N,C,H/2,W/2]  mean over non-overlapping 2x2 blocks (even dims).
Tensor avg_pool2x2(const Tensor& input);

// Mean of squared elementwise differences -> scalar.
Tensor mse(const Tensor& a, const Tensor& b);

// Weighted sum of scalar tensors -> scalar. sum_i weights[i]*terms[i].
Tensor scalar_combine(const std::vector<Tensor>& terms, const std::vector<double>& weights);

}  // namespace pssr::ad
