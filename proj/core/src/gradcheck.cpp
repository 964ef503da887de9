#include "pssr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pssr/rng.hpp"

namespace pssr::ad {

GradCheckResult grad_check(const std::function<Tensor()>& build_loss,
                           std::vector<Tensor> leaves, double step,
                           int64_t max_coords, uint64_t seed) {
  GradCheckResult res;

  for (auto& l : leaves) {
    l.set_requires_grad(true);
    l.zero_grad();
  }

  Tensor loss = build_loss();
  loss.backward();

  // Flatten (leaf, index) coordinate space.
  struct Coord {
    size_t leaf;
    size_t idx;
  };
  std::vector<Coord> coords;
  int64_t total = 0;
  for (size_t li = 0; li < leaves.size(); ++li) total += leaves[li].size();
  if (total <= max_coords) {
    coords.reserve(static_cast<size_t>(total));
    for (size_t li = 0; li < leaves.size(); ++li)
      for (size_t i = 0; i < leaves[li].values().size(); ++i) coords.push_back({li, i});
  } else {
    // Seeded subset without replacement: pick max_coords global offsets.
    std::vector<int64_t> offsets(static_cast<size_t>(total));
    std::iota(offsets.begin(), offsets.end(), 0);
    SplitMix64 rng(seed);
    for (int64_t i = 0; i < max_coords; ++i) {
      int64_t j = i + static_cast<int64_t>(rng.next() % static_cast<uint64_t>(total - i));
      std::swap(offsets[static_cast<size_t>(i)], offsets[static_cast<size_t>(j)]);
    }
    offsets.resize(static_cast<size_t>(max_coords));
    std::sort(offsets.begin(), offsets.end());
    coords.reserve(offsets.size());
    for (int64_t off : offsets) {
      int64_t rem = off;
      for (size_t li = 0; li < leaves.size(); ++li) {
        if (rem < leaves[li].size()) {
          coords.push_back({li, static_cast<size_t>(rem)});
          break;
        }
        rem -= leaves[li].size();
      }
    }
  }

  auto leaf_tag = [&](size_t li, size_t idx) {
    const std::string& nm = leaves[li].name();
    return (nm.empty() ? "leaf" + std::to_string(li) : nm) + "[" + std::to_string(idx) + "]";
  };

  for (const Coord& c : coords) {
    const double analytic = leaves[c.leaf].grad()[c.idx];
    if (!std::isfinite(analytic)) {
      res.analytic_finite = false;
      res.max_rel_err = std::numeric_limits<double>::infinity();
      res.worst_coord = leaf_tag(c.leaf, c.idx);
      return res;
    }
    double& slot = leaves[c.leaf].values()[c.idx];
    const double v0 = slot;
    slot = v0 + step;
    const double fp = build_loss().item();
    slot = v0 - step;
    const double fm = build_loss().item();
    slot = v0;
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    const double rel = std::abs(analytic - numeric) / denom;
    ++res.coords_checked;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_coord = leaf_tag(c.leaf, c.idx);
    }
  }
  return res;
}

}  // namespace pssr::ad
