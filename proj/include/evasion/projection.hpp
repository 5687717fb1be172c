#pragma once

#include <stdexcept>
#include <string>

#include "evasion/data.hpp"
#include "evasion/vector_ops.hpp"

namespace evasion {

enum class DistanceKind { L1, L2 };

std::string to_string(DistanceKind k);
DistanceKind distance_kind_from_string(const std::string& s);

double distance(DistanceKind kind, VectorView a, VectorView b);

class InfeasibleError : public std::invalid_argument {
 public:
  explicit InfeasibleError(const std::string& what) : std::invalid_argument(what) {}
};

/// Euclidean projection onto {u : |u|_1 <= radius} (sort-based soft threshold).
Vector project_l1_ball(VectorView v, double radius);

/// Euclidean projection of x onto {d(., x0) <= d_max} ∩ box (∩ {. >= x0} when
/// increment_only). Throws InfeasibleError when x0 itself violates the bounds.
Vector project_feasible(DistanceKind kind, double d_max, const FeatureBounds& bounds, VectorView x0,
                        VectorView x);

}  // namespace evasion
