#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evasion {

using Vector = std::vector<double>;
using VectorView = std::span<const double>;

class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::size_t expected, std::size_t actual)
      : std::invalid_argument("dimension mismatch: expected " +
                              std::to_string(expected) + ", got " +
                              std::to_string(actual)) {}
};

inline void require_same_dim(VectorView a, VectorView b) {
  if (a.size() != b.size()) throw DimensionError(a.size(), b.size());
}

inline double dot(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_l2(VectorView a) { return std::sqrt(dot(a, a)); }

inline double norm_l1(VectorView a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double squared_l2_distance(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double l1_distance(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// y += alpha * x
inline void axpy(double alpha, VectorView x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(VectorView a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace evasion
