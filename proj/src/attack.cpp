#include "evasion/attack.hpp"

#include <algorithm>
#include <cmath>

namespace evasion {

std::string to_string(AttackMode m) { return m == AttackMode::Continuous ? "continuous" : "discrete"; }

AttackMode attack_mode_from_string(const std::string& s) {
  if (s == "continuous") return AttackMode::Continuous;
  if (s == "discrete") return AttackMode::Discrete;
  throw std::invalid_argument("unknown attack mode '" + s + "'");
}

std::string to_string(StepNorm s) { return s == StepNorm::L2 ? "l2" : "l1"; }

StepNorm step_norm_from_string(const std::string& s) {
  if (s == "l2") return StepNorm::L2;
  if (s == "l1") return StepNorm::L1;
  throw std::invalid_argument("unknown step norm '" + s + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::BudgetBoundaryConverged: return "budget_boundary_converged";
    case Termination::MaxIters: return "max_iters";
    case Termination::ZeroGradient: return "zero_gradient";
  }
  return "?";
}

void AttackSpec::validate(std::size_t dim) const {
  if (!(d_max >= 0.0)) throw std::invalid_argument("d_max must be nonnegative");
  if (!(step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
  if (lambda > 0.0 && !mimicry) throw std::invalid_argument("lambda > 0 requires a mimicry estimator");
  if (mimicry && mimicry->dim() != dim) throw DimensionError(dim, mimicry->dim());
  if (bounds.dim() != dim) throw DimensionError(dim, bounds.dim());
  bounds.validate();
  if (mode == AttackMode::Discrete) {
    for (std::size_t i = 0; i < dim; ++i) {
      const bool lo_ok = std::isinf(bounds.lower[i]) || bounds.lower[i] == std::floor(bounds.lower[i]);
      const bool hi_ok = std::isinf(bounds.upper[i]) || bounds.upper[i] == std::floor(bounds.upper[i]);
      if (!lo_ok || !hi_ok) throw std::invalid_argument("discrete mode requires integer-valued bounds");
    }
  }
}

std::optional<std::size_t> AttackTrace::first_evading() const {
  for (std::size_t i = 0; i < g_target.size(); ++i)
    if (predict_from_score(g_target[i], target_offset) == Label::Legitimate) return i;
  return std::nullopt;
}

bool AttackTrace::distances_nondecreasing() const {
  for (std::size_t i = 1; i < distances.size(); ++i)
    if (distances[i] < distances[i - 1] - 1e-12) return false;
  return true;
}

double objective_F(const Classifier& model, const AttackSpec& spec, VectorView x) {
  const double g = model.discriminant(x);
  if (spec.lambda == 0.0) return g;
  if (!spec.mimicry) throw std::invalid_argument("lambda > 0 requires a mimicry estimator");
  return g - spec.lambda * spec.mimicry->density(x);
}

Vector objective_grad(const Classifier& model, const AttackSpec& spec, VectorView x) {
  Vector grad = model.discriminant_grad(x);
  if (spec.lambda == 0.0) return grad;
  if (!spec.mimicry) throw std::invalid_argument("lambda > 0 requires a mimicry estimator");
  axpy(-spec.lambda, spec.mimicry->density_grad(x), grad);
  return grad;
}

std::optional<Vector> normalize_step(VectorView grad) {
  const double n = norm_l2(grad);
  if (!(n > 1e-12)) return std::nullopt;
  Vector out(grad.begin(), grad.end());
  for (auto& v : out) v /= n;
  return out;
}

namespace {

void check_start(const AttackSpec& spec, VectorView x0) {
  spec.validate(x0.size());
  if (!all_finite(x0)) throw InfeasibleError("initial point has non-finite values");
  if (!spec.bounds.contains(x0, x0, 0.0)) throw InfeasibleError("initial point violates the feature bounds");
}

struct TraceBuilder {
  const Classifier& model;
  const AttackSpec& spec;
  VectorView x0;
  AttackTrace trace;

  void push(Vector x, double F) {
    trace.g_values.push_back(model.discriminant(x));
    trace.distances.push_back(distance(spec.distance, x, x0));
    trace.objective_values.push_back(F);
    trace.points.push_back(std::move(x));
  }

  bool on_boundary() const { return trace.distances.back() >= spec.d_max - 1e-9; }

  AttackTrace finish(Termination t) {
    trace.termination = t;
    trace.iterations = trace.points.size() - 1;
    trace.target_offset = model.decision_offset();
    trace.g_target = trace.g_values;
    trace.evaded = predict_from_score(trace.g_target.back(), trace.target_offset) == Label::Legitimate;
    return std::move(trace);
  }
};

}  // namespace

AttackTrace evade_continuous(const Classifier& model, const AttackSpec& spec, VectorView x0) {
  check_start(spec, x0);
  TraceBuilder tb{model, spec, x0, {}};
  Vector x(x0.begin(), x0.end());
  double F_prev = objective_F(model, spec, x);
  tb.push(x, F_prev);

  for (std::size_t m = 1; m <= spec.max_iters; ++m) {
    const auto unit = normalize_step(objective_grad(model, spec, x));
    if (!unit) return tb.finish(Termination::ZeroGradient);

    double step = spec.step_size;
    if (spec.step_norm == StepNorm::L1) step /= norm_l1(*unit);
    Vector cand = x;
    axpy(-step, *unit, cand);
    if (distance(spec.distance, cand, x0) > spec.d_max || !spec.bounds.contains(x0, cand, 0.0))
      cand = project_feasible(spec.distance, spec.d_max, spec.bounds, x0, cand);

    const double F = objective_F(model, spec, cand);
    if (!(F < F_prev)) {
      // Rejected step; the trace ends at the last accepted point.
      return tb.finish(tb.on_boundary() ? Termination::BudgetBoundaryConverged : Termination::Converged);
    }
    tb.push(cand, F);
    if (F_prev - F < spec.epsilon)
      return tb.finish(tb.on_boundary() ? Termination::BudgetBoundaryConverged : Termination::Converged);
    F_prev = F;
    x = std::move(cand);
  }
  return tb.finish(Termination::MaxIters);
}

AttackTrace evade_discrete(const Classifier& model, const AttackSpec& spec, VectorView x0) {
  check_start(spec, x0);
  for (double v : x0)
    if (std::abs(v - std::round(v)) > 1e-9) throw InfeasibleError("discrete mode requires an integer-valued start");

  TraceBuilder tb{model, spec, x0, {}};
  Vector x(x0.begin(), x0.end());
  double F_prev = objective_F(model, spec, x);
  tb.push(x, F_prev);
  const std::size_t d = x.size();
  // Running distance pieces so each candidate is checked in O(1).
  double l1 = 0.0, sq = 0.0;

  struct Move {
    double alignment;
    std::size_t j;
    int s;
  };
  std::vector<Move> moves;

  for (std::size_t m = 1; m <= spec.max_iters; ++m) {
    const Vector grad = objective_grad(model, spec, x);
    if (!(norm_l2(grad) > 1e-12)) return tb.finish(Termination::ZeroGradient);

    moves.clear();
    bool budget_blocked = false;
    for (std::size_t j = 0; j < d; ++j) {
      for (int s : {+1, -1}) {
        if (s < 0 && spec.bounds.increment_only) continue;
        const double alignment = -s * grad[j];
        if (!(alignment > 0.0)) continue;
        const double nv = x[j] + s;
        if (nv < spec.bounds.lower[j] || nv > spec.bounds.upper[j]) continue;
        if (spec.bounds.increment_only && nv < x0[j]) continue;
        const double old_off = x[j] - x0[j];
        const double new_off = nv - x0[j];
        const double nd = spec.distance == DistanceKind::L1
                              ? l1 - std::abs(old_off) + std::abs(new_off)
                              : std::sqrt(std::max(0.0, sq - old_off * old_off + new_off * new_off));
        if (nd > spec.d_max + 1e-9) {
          budget_blocked = true;
          continue;
        }
        moves.push_back({alignment, j, s});
      }
    }
    std::stable_sort(moves.begin(), moves.end(),
                     [](const Move& a, const Move& b) { return a.alignment > b.alignment; });

    bool accepted = false;
    for (const auto& mv : moves) {
      Vector cand = x;
      cand[mv.j] += mv.s;
      const double F = objective_F(model, spec, cand);
      if (F < F_prev) {
        const double old_off = x[mv.j] - x0[mv.j];
        const double new_off = cand[mv.j] - x0[mv.j];
        l1 += std::abs(new_off) - std::abs(old_off);
        sq += new_off * new_off - old_off * old_off;
        x = std::move(cand);
        F_prev = F;
        tb.push(x, F);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      return tb.finish(budget_blocked || tb.on_boundary() ? Termination::BudgetBoundaryConverged
                                                          : Termination::Converged);
  }
  return tb.finish(Termination::MaxIters);
}

AttackTrace evade(const Classifier& model, const AttackSpec& spec, VectorView x0) {
  return spec.mode == AttackMode::Continuous ? evade_continuous(model, spec, x0)
                                             : evade_discrete(model, spec, x0);
}

void judge_trace(AttackTrace& trace, const Classifier& target) {
  trace.target_offset = target.decision_offset();
  trace.g_target.resize(trace.points.size());
  for (std::size_t i = 0; i < trace.points.size(); ++i) trace.g_target[i] = target.discriminant(trace.points[i]);
  trace.evaded = predict_from_score(trace.g_target.back(), trace.target_offset) == Label::Legitimate;
}

}  // namespace evasion
