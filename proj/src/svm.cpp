#include <algorithm>
#include <cmath>
#include <limits>

#include "evasion/models.hpp"

namespace evasion {

namespace {

constexpr double kTau = 1e-12;

bool all_points_identical(const Dataset& ds) {
  const auto& first = ds[0].x;
  for (const auto& s : ds.samples())
    if (s.x != first) return false;
  return true;
}

}  // namespace

// Dual: min 1/2 a'Qa - e'a  s.t. 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
// G holds the dual gradient Qa - e.
SvmTrainResult train_svm_dual(const Dataset& train, const KernelSpec& kernel, double C,
                              double tolerance, std::size_t max_iterations) {
  kernel.validate();
  if (!(C > 0.0)) throw ModelError("svm requires C > 0");
  if (!train.has_both_classes()) throw ModelError("svm training requires both classes");
  if (all_points_identical(train)) throw ModelError("degenerate training data: all points identical");

  const std::size_t n = train.size();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = label_value(train[i].y);

  std::vector<double> Q(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double q = y[i] * y[j] * kernel_eval(kernel, train[i].x, train[j].x);
      Q[i * n + j] = q;
      Q[j * n + i] = q;
    }

  Vector alpha(n, 0.0);
  Vector G(n, -1.0);
  const auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
  };
  const auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
  };

  std::size_t iter = 0;
  double gap = 0.0;
  for (; iter < max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * G[t] >= gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
      if (in_low(t) && y[t] * G[t] >= gmax2) {
        gmax2 = y[t] * G[t];
        j = t;
      }
    }
    gap = gmax + gmax2;
    if (i == n || j == n || gap < tolerance) break;

    const double* Qi = &Q[i * n];
    const double* Qj = &Q[j * n];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = Qi[i] + Qj[j] + 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Qi[i] + Qj[j] - 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Qi[t] * dai + Qj[t] * daj;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  SvmTrainResult result;
  result.model.kernel = kernel;
  result.model.C = C;
  result.model.b = -rho;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      result.model.support_vectors.push_back(train[t].x);
      result.model.dual_coefs.push_back(alpha[t] * y[t]);
    }
  }
  result.alphas = std::move(alpha);
  result.iterations = iter;
  result.final_gap = gap;
  if (result.model.support_vectors.empty()) throw ModelError("svm training produced no support vectors");
  return result;
}

SvmModel train_kernel_svm(const Dataset& train, const KernelSpec& kernel, double C, double tolerance) {
  return train_svm_dual(train, kernel, C, tolerance).model;
}

LinearModel collapse_linear(const SvmModel& svm) {
  if (svm.kernel.kind != KernelKind::Linear) throw ModelError("only linear-kernel SVMs collapse to w");
  LinearModel lin;
  lin.w.assign(svm.support_vectors.front().size(), 0.0);
  for (std::size_t i = 0; i < svm.support_vectors.size(); ++i)
    axpy(svm.dual_coefs[i], svm.support_vectors[i], lin.w);
  lin.b = svm.b;
  return lin;
}

LinearModel train_linear_svm(const Dataset& train, double C, double tolerance) {
  return collapse_linear(train_kernel_svm(train, KernelSpec::linear(), C, tolerance));
}

}  // namespace evasion
