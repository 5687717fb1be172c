#pragma once

#include <string>

#include "evasion/vector_ops.hpp"

namespace evasion {

enum class KernelKind { Linear, Rbf, Polynomial };

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  double gamma = 1.0;  // rbf
  int degree = 2;      // polynomial
  double coef0 = 0.0;  // polynomial offset c

  static KernelSpec linear() { return {KernelKind::Linear, 1.0, 1, 0.0}; }
  static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma, 1, 0.0}; }
  static KernelSpec polynomial(int degree, double coef0) {
    return {KernelKind::Polynomial, 1.0, degree, coef0};
  }

  void validate() const;
};

/// linear <x,xi>; rbf exp(-gamma |x-xi|^2); polynomial (<x,xi> + c)^p
double kernel_eval(const KernelSpec& k, VectorView x, VectorView xi);

/// Gradient of kernel_eval with respect to x, accumulated as out += scale * grad.
void kernel_grad_accumulate(const KernelSpec& k, VectorView x, VectorView xi, double scale,
                            std::span<double> out);

Vector kernel_grad(const KernelSpec& k, VectorView x, VectorView xi);

}  // namespace evasion
