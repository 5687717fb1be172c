#include "evasion/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace evasion {

std::string to_string(DistanceKind k) { return k == DistanceKind::L1 ? "l1" : "l2"; }

DistanceKind distance_kind_from_string(const std::string& s) {
  if (s == "l1") return DistanceKind::L1;
  if (s == "l2") return DistanceKind::L2;
  throw std::invalid_argument("unknown distance '" + s + "', expected l1|l2");
}

double distance(DistanceKind kind, VectorView a, VectorView b) {
  require_same_dim(a, b);
  return kind == DistanceKind::L1 ? l1_distance(a, b) : std::sqrt(squared_l2_distance(a, b));
}

Vector project_l1_ball(VectorView v, double radius) {
  Vector out(v.begin(), v.end());
  if (norm_l1(v) <= radius) return out;
  if (radius <= 0.0) return Vector(v.size(), 0.0);
  Vector mags(v.size());
  std::transform(v.begin(), v.end(), mags.begin(), [](double a) { return std::abs(a); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  // Largest k with mags[k-1] > (sum_{i<k} mags[i] - radius) / k.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cumsum += mags[k];
    const double t = (cumsum - radius) / static_cast<double>(k + 1);
    if (mags[k] > t) theta = t;
  }
  for (auto& a : out) a = std::copysign(std::max(std::abs(a) - theta, 0.0), a);
  return out;
}

namespace {

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Bisection on a nonincreasing radius function. Returns the multiplier at the
// feasible end of the final bracket.
template <typename RadiusFn>
double bisect_multiplier(RadiusFn radius_at, double hi, double target) {
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (radius_at(mid) > target) lo = mid;
    else hi = mid;
  }
  return hi;
}

}  // namespace

Vector project_feasible(DistanceKind kind, double d_max, const FeatureBounds& bounds, VectorView x0,
                        VectorView x) {
  require_same_dim(x0, x);
  require_same_dim(bounds.lower, x);
  if (d_max < 0.0) throw InfeasibleError("budget d_max must be nonnegative");
  if (!bounds.contains(x0, x0, 0.0)) throw InfeasibleError("initial point violates the feature bounds");

  // Work in displacement coordinates u = x - x0; the box for u contains 0.
  const std::size_t d = x.size();
  Vector z(d), lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    z[i] = x[i] - x0[i];
    lo[i] = bounds.lower[i] - x0[i];
    if (bounds.increment_only) lo[i] = std::max(lo[i], 0.0);
    hi[i] = bounds.upper[i] - x0[i];
  }

  Vector u(d);
  if (kind == DistanceKind::L1) {
    // u_i = clip(soft(z_i, tau)) with tau the smallest multiplier meeting the budget.
    const auto at = [&](double tau) {
      for (std::size_t i = 0; i < d; ++i) {
        const double s = std::copysign(std::max(std::abs(z[i]) - tau, 0.0), z[i]);
        u[i] = clip(s, lo[i], hi[i]);
      }
      return norm_l1(u);
    };
    if (at(0.0) > d_max) {
      // Exact ball projection is the answer whenever it already sits in the box.
      const Vector ball = project_l1_ball(z, d_max);
      bool inside = true;
      for (std::size_t i = 0; i < d && inside; ++i) inside = ball[i] >= lo[i] && ball[i] <= hi[i];
      if (inside) {
        u = ball;
      } else {
        double top = 0.0;
        for (double v : z) top = std::max(top, std::abs(v));
        at(bisect_multiplier(at, top, d_max));
      }
    }
  } else {
    // u_i = clip(z_i / (1 + mu)).
    const auto at = [&](double mu) {
      for (std::size_t i = 0; i < d; ++i) u[i] = clip(z[i] / (1.0 + mu), lo[i], hi[i]);
      return norm_l2(u);
    };
    if (at(0.0) > d_max) {
      if (d_max == 0.0) {
        std::fill(u.begin(), u.end(), 0.0);
      } else {
        at(bisect_multiplier(at, norm_l2(z) / d_max, d_max));
      }
    }
  }

  Vector out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = clip(x0[i] + u[i], bounds.lower[i], bounds.upper[i]);
  return out;
}

}  // namespace evasion
