#pragma once

#include <functional>

#include "pssr/tensor.hpp"

namespace pssr::ad {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
  std::string worst_coord;  // "leaf_name[flat_index]"
  bool analytic_finite = true;
};

// Compares analytic gradients of build_loss() against central finite
// differences. build_loss must rebuild its graph from the current values of
// `leaves` on every call; leaves are perturbed in place and restored.
//
// When the leaves hold more than max_coords scalar coordinates, a seeded
// random subset of max_coords coordinates is checked instead.
//
// Relative error per coordinate: |a - n| / max(1, |a|, |n|).
GradCheckResult grad_check(const std::function<Tensor()>& build_loss,
                           std::vector<Tensor> leaves, double step = 1e-5,
                           int64_t max_coords = 10000, uint64_t seed = 0x9c0ffee);

}  // namespace pssr::ad
