#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace mlmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Vector& x) { return x.allFinite(); }

// Ceiling that ignores relative round-off of order 1e-12, so that values like
// 12799.999999999998 or 70.00000000000001 map to the intended integer.
inline std::int64_t ceil_count(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-12 * std::max(1.0, std::abs(x))) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::ceil(x));
}

inline int floor_log2(std::int64_t n) {
  int j = -1;
  while (n > 0) {
    n >>= 1;
    ++j;
  }
  return j;
}

}  // namespace mlmc
