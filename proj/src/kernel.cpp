#include "evasion/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace evasion {

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Polynomial: return "polynomial";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "rbf") return KernelKind::Rbf;
  if (s == "polynomial" || s == "poly") return KernelKind::Polynomial;
  throw std::invalid_argument("unknown kernel kind '" + s + "'");
}

void KernelSpec::validate() const {
  if (kind == KernelKind::Rbf && !(gamma > 0.0))
    throw std::invalid_argument("rbf kernel requires gamma > 0");
  if (kind == KernelKind::Polynomial && degree < 1)
    throw std::invalid_argument("polynomial kernel requires degree >= 1");
}

double kernel_eval(const KernelSpec& k, VectorView x, VectorView xi) {
  require_same_dim(x, xi);
  switch (k.kind) {
    case KernelKind::Linear: return dot(x, xi);
    case KernelKind::Rbf: return std::exp(-k.gamma * squared_l2_distance(x, xi));
    case KernelKind::Polynomial: return std::pow(dot(x, xi) + k.coef0, k.degree);
  }
  return 0.0;
}

void kernel_grad_accumulate(const KernelSpec& k, VectorView x, VectorView xi, double scale,
                            std::span<double> out) {
  require_same_dim(x, xi);
  switch (k.kind) {
    case KernelKind::Linear:
      axpy(scale, xi, out);
      return;
    case KernelKind::Rbf: {
      const double c = -2.0 * k.gamma * std::exp(-k.gamma * squared_l2_distance(x, xi)) * scale;
      if (c == 0.0) return;
      for (std::size_t j = 0; j < x.size(); ++j) out[j] += c * (x[j] - xi[j]);
      return;
    }
    case KernelKind::Polynomial: {
      const double c = k.degree * std::pow(dot(x, xi) + k.coef0, k.degree - 1) * scale;
      axpy(c, xi, out);
      return;
    }
  }
}

Vector kernel_grad(const KernelSpec& k, VectorView x, VectorView xi) {
  Vector g(x.size(), 0.0);
  kernel_grad_accumulate(k, x, xi, 1.0, g);
  return g;
}

}  // namespace evasion
