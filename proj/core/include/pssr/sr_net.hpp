#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pssr/image.hpp"
#include "pssr/qa_net.hpp"
#include "pssr/tensor.hpp"

namespace pssr::iqp {

struct SRConfig {
  int trunk_width = 16;  // must equal the QA first-layer width for substitution
  int trunk_layers = 3;
  int kernel = 3;
  int in_channels = 3;
  double slope = 0.1;

  std::string to_json() const;
  static SRConfig from_json(const std::string& json_text);
};

// Toy residual stereo SR net operating at HR resolution on the bicubic
// upsample. Trunk weights are shared across views; layer 2 consumes the
// concat of a view's features with the other view's. The reconstruction
// conv starts at zero so a fresh model is the bicubic upsample exactly.
struct SRModel {
  SRConfig cfg;
  std::vector<qa::ConvLayer> trunk;
  qa::ConvLayer recon;

  static SRModel init(const SRConfig& cfg, uint64_t seed);

  std::vector<ad::Tensor> parameters() const;
  ad::NamedTensors named_parameters() const;

  void save(const std::string& weights_path) const;
  static SRModel load(const std::string& weights_path);
};

struct SRForward {
  ad::Tensor sr_left, sr_right;      // [N,3,H,W]
  ad::Tensor feat_left, feat_right;  // [N,trunk_width,H,W] last trunk features
};

// up_left/up_right: bicubic-upsampled LR views at HR resolution.
SRForward sr_forward(const SRModel& model, const ad::Tensor& up_left, const ad::Tensor& up_right);

// LR pair in, clamped HR pair out (scale in {2,3,4}).
img::StereoPair super_resolve(const SRModel& model, const img::StereoPair& lr, int scale);

}  // namespace pssr::iqp
