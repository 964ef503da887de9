#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace pssr {

inline constexpr double kPi = 3.14159265358979323846;

// SplitMix64. Small, fast, and the same bit stream on every platform,
// which is what keeps experiment reruns byte-identical.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }

  // Standard normal via Box-Muller; generates pairs, second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u in (0,1] so log(u) is finite.
    double u = 1.0 - uniform();
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double a = 2.0 * kPi * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Deterministic in-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[i], v[static_cast<size_t>(j)]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable sub-seed derivation: base xor a hash of (a, b). Parallel or
// reordered consumers see the same per-item stream either way.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
  SplitMix64 h(a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL);
  return base ^ h.next();
}

}  // namespace pssr
