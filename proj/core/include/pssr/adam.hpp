#pragma once

#include "pssr/tensor.hpp"

namespace pssr::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moments are allocated
// per parameter with matching shapes; step() consumes the accumulated
// grads and leaves them untouched (call zero_grad() between steps).
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {});

  // One update from the parameters' current grads.
  // Throws std::runtime_error naming the parameter on non-finite grads.
  void step();

  void zero_grad();

  int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<double>& first_moment(size_t i) const { return m_[i]; }
  const std::vector<double>& second_moment(size_t i) const { return v_[i]; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig cfg_;
  int64_t step_count_ = 0;
};

}  // namespace pssr::ad
