#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pssr::checks {

struct GradSuiteEntry {
  std::string name;
  double max_rel_err = 0.0;
  int64_t coords = 0;
  bool pass = false;
};

inline constexpr double kGradTolerance = 1e-4;

// Finite-difference validation of every graph op, the full QA network on a
// tiny config, and the full combined IQP loss graph.
std::vector<GradSuiteEntry> run_gradcheck_suite(uint64_t seed = 17);

bool all_pass(const std::vector<GradSuiteEntry>& entries);

}  // namespace pssr::checks
