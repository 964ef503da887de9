#include <cmath>
#include <stdexcept>

#include "pssr/rankmos.hpp"

namespace pssr::rankmos {

namespace {

void check_lengths(const char* op, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument(std::string(op) + ": length mismatch " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  if (x.size() < 2)
    throw std::invalid_argument(std::string(op) + ": need at least 2 samples, got " +
                                std::to_string(x.size()));
}

bool is_constant(std::span<const double> x) {
  for (double v : x)
    if (v != x[0]) return false;
  return true;
}

double pearson(const char* op, std::span<const double> x, std::span<const double> y) {
  if (is_constant(x) || is_constant(y))
    throw std::invalid_argument(std::string(op) + ": constant input has no defined correlation");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double plcc(std::span<const double> x, std::span<const double> y) {
  check_lengths("plcc", x, y);
  return pearson("plcc", x, y);
}

double srocc(std::span<const double> x, std::span<const double> y) {
  check_lengths("srocc", x, y);
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson("srocc", rx, ry);
}

double krocc(std::span<const double> x, std::span<const double> y) {
  check_lengths("krocc", x, y);
  if (is_constant(x) || is_constant(y))
    throw std::invalid_argument("krocc: constant input has no defined correlation");
  const size_t n = x.size();
  int64_t concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) {
        ++ties_x;
        ++ties_y;
      } else if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double denom =
      std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
  if (denom == 0.0) throw std::invalid_argument("krocc: degenerate (all pairs tied)");
  return static_cast<double>(concordant - discordant) / denom;
}

double rmse(std::span<const double> x, std::span<const double> y) {
  check_lengths("rmse", x, y);
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace pssr::rankmos
