#pragma once

// Independent brute-force reference implementations shared by the unit tests
// and the acceptance binary.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "evasion/data.hpp"
#include "evasion/projection.hpp"

namespace oracle {

inline bool feasible(evasion::DistanceKind kind, double d_max, const evasion::FeatureBounds& b,
                     const evasion::Vector& x0, const evasion::Vector& u, double tol = 1e-12) {
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < b.lower[i] - tol || u[i] > b.upper[i] + tol) return false;
    if (b.increment_only && u[i] < x0[i] - tol) return false;
    const double diff = u[i] - x0[i];
    d += kind == evasion::DistanceKind::L1 ? std::abs(diff) : diff * diff;
  }
  if (kind == evasion::DistanceKind::L2) d = std::sqrt(d);
  return d <= d_max + tol;
}

/// Nearest feasible grid point to x, by coarse-to-fine grid search ending at
/// step `fine`. The feasible set is convex, so refining around the coarse
/// optimum cannot miss the global one by more than a coarse cell.
inline evasion::Vector project_grid(evasion::DistanceKind kind, double d_max, const evasion::FeatureBounds& b,
                                    const evasion::Vector& x0, const evasion::Vector& x, double fine = 1e-3) {
  const std::size_t n = x.size();
  evasion::Vector lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::max(b.lower[i], x0[i] - d_max);
    hi[i] = std::min(b.upper[i], x0[i] + d_max);
    if (b.increment_only) lo[i] = std::max(lo[i], x0[i]);
  }
  evasion::Vector best = x0;
  double step = (d_max > 0 ? d_max : 1.0) / 20.0;
  while (true) {
    const double s = std::max(step, fine);
    std::vector<long> count(n);
    evasion::Vector start(n);
    for (std::size_t i = 0; i < n; ++i) {
      // grid anchored at x0 so that x0 (always feasible) is a grid point
      const long k_lo = static_cast<long>(std::ceil((lo[i] - x0[i]) / s - 1e-9));
      const long k_hi = static_cast<long>(std::floor((hi[i] - x0[i]) / s + 1e-9));
      start[i] = x0[i] + k_lo * s;
      count[i] = k_hi - k_lo + 1;
    }
    double best_d = std::numeric_limits<double>::infinity();
    evasion::Vector cand = best;
    std::vector<long> idx(n, 0);
    evasion::Vector u(n);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) u[i] = std::min(start[i] + idx[i] * s, hi[i]);
      if (feasible(kind, d_max, b, x0, u, 1e-12)) {
        double dd = 0.0;
        for (std::size_t i = 0; i < n; ++i) dd += (u[i] - x[i]) * (u[i] - x[i]);
        if (dd < best_d) {
          best_d = dd;
          cand = u;
        }
      }
      std::size_t i = 0;
      while (i < n && ++idx[i] >= count[i]) idx[i++] = 0;
      if (i == n) break;
    }
    best = cand;
    if (s <= fine) return best;
    // next level: window of two coarse cells around the current optimum
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::max(lo[i], best[i] - 2 * s);
      hi[i] = std::min(hi[i], best[i] + 2 * s);
    }
    step = s / 10.0;
  }
}

/// Minimum of f over all integer points u with bounds and ||u - x0||_1 <= budget.
inline double exhaustive_min(const std::function<double(const evasion::Vector&)>& f,
                             const evasion::FeatureBounds& b, const evasion::Vector& x0, long budget) {
  const std::size_t n = x0.size();
  double best = std::numeric_limits<double>::infinity();
  evasion::Vector u(n);
  std::vector<long> off(n, -budget);
  while (true) {
    long used = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = x0[i] + static_cast<double>(off[i]);
      used += std::labs(off[i]);
      if (u[i] < b.lower[i] || u[i] > b.upper[i] || (b.increment_only && off[i] < 0)) ok = false;
    }
    if (ok && used <= budget) best = std::min(best, f(u));
    std::size_t i = 0;
    while (i < n && ++off[i] > budget) off[i++] = -budget;
    if (i == n) break;
  }
  return best;
}

}  // namespace oracle
