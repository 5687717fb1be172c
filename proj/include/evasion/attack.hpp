#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evasion/data.hpp"
#include "evasion/mimicry.hpp"
#include "evasion/models.hpp"
#include "evasion/projection.hpp"

namespace evasion {

enum class AttackMode { Continuous, Discrete };

/// Norm fixed to t per continuous step: l2 moves t in Euclidean length, l1
/// rescales the unit l2 direction so that each step changes the l1 norm by t.
enum class StepNorm { L2, L1 };

enum class Termination { Converged, BudgetBoundaryConverged, MaxIters, ZeroGradient };

std::string to_string(AttackMode m);
AttackMode attack_mode_from_string(const std::string& s);
std::string to_string(StepNorm s);
StepNorm step_norm_from_string(const std::string& s);
std::string to_string(Termination t);

struct AttackSpec {
  DistanceKind distance = DistanceKind::L1;
  double d_max = 0.0;
  double step_size = 1.0;
  StepNorm step_norm = StepNorm::L2;
  double lambda = 0.0;
  double epsilon = 1e-6;
  std::size_t max_iters = 500;
  FeatureBounds bounds;
  AttackMode mode = AttackMode::Continuous;
  std::shared_ptr<const MimicryEstimator> mimicry;

  /// Cross-field checks; dim is the feature dimensionality.
  void validate(std::size_t dim) const;
};

struct AttackTrace {
  std::vector<Vector> points;  // x0 first, x* last
  Vector objective_values;     // F at each point (descent model)
  Vector g_values;             // g of the descent model at each point
  Vector distances;            // d(x, x0) at each point
  Vector g_target;             // g of the judging model, filled by judge_trace
  double target_offset = 0.0;  // decision offset used for g_target
  bool evaded = false;
  std::size_t iterations = 0;
  Termination termination = Termination::Converged;

  const Vector& final_point() const { return points.back(); }
  /// Index of the first point the judging model labels legitimate.
  std::optional<std::size_t> first_evading() const;
  /// True when distances never decrease along the trace.
  bool distances_nondecreasing() const;
};

/// F(x) = g(x) - lambda * density(x).
double objective_F(const Classifier& model, const AttackSpec& spec, VectorView x);
Vector objective_grad(const Classifier& model, const AttackSpec& spec, VectorView x);

/// grad / |grad|_2, or nullopt when |grad|_2 <= 1e-12.
std::optional<Vector> normalize_step(VectorView grad);

/// Projected gradient descent on F.
AttackTrace evade_continuous(const Classifier& model, const AttackSpec& spec, VectorView x0);

/// Greedy single-coordinate unit moves aligned with -grad F.
AttackTrace evade_discrete(const Classifier& model, const AttackSpec& spec, VectorView x0);

AttackTrace evade(const Classifier& model, const AttackSpec& spec, VectorView x0);

/// Scores every trace point with the judging model and sets `evaded` from the
/// final point.
void judge_trace(AttackTrace& trace, const Classifier& target);

}  // namespace evasion
