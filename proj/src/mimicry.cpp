#include "evasion/mimicry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evasion {

std::string to_string(KdeKernel k) { return k == KdeKernel::Laplacian ? "laplacian" : "rbf"; }

KdeKernel kde_kernel_from_string(const std::string& s) {
  if (s == "laplacian" || s == "l1") return KdeKernel::Laplacian;
  if (s == "rbf" || s == "l2") return KdeKernel::Rbf;
  throw std::invalid_argument("unknown kde kernel '" + s + "'");
}

std::string to_string(KdeGradForm f) { return f == KdeGradForm::Corrected ? "corrected" : "difference"; }

KdeGradForm kde_grad_form_from_string(const std::string& s) {
  if (s == "corrected") return KdeGradForm::Corrected;
  if (s == "difference") return KdeGradForm::Difference;
  throw std::invalid_argument("unknown kde_grad '" + s + "', expected corrected|difference");
}

MimicryEstimator::MimicryEstimator(std::vector<Vector> reference_points, MimicryConfig config)
    : refs_(std::move(reference_points)), config_(config) {
  if (refs_.empty()) throw std::invalid_argument("mimicry estimator needs reference points");
  if (!(config_.bandwidth > 0.0)) throw std::invalid_argument("kde bandwidth must be positive");
  if (config_.truncation_k < 1) throw std::invalid_argument("kde truncation_k must be >= 1");
  for (const auto& r : refs_) require_same_dim(refs_.front(), r);
}

std::size_t MimicryEstimator::n_used() const { return std::min(config_.truncation_k, refs_.size()); }

double MimicryEstimator::distance(VectorView x, VectorView xi) const {
  return config_.kernel == KdeKernel::Laplacian ? l1_distance(x, xi) : squared_l2_distance(x, xi);
}

std::vector<std::size_t> MimicryEstimator::nearest(VectorView x) const {
  require_same_dim(refs_.front(), x);
  std::vector<std::size_t> idx(refs_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t k = n_used();
  if (k == refs_.size()) return idx;
  Vector dist(refs_.size());
  for (std::size_t i = 0; i < refs_.size(); ++i) dist[i] = distance(x, refs_[i]);
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                   });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double MimicryEstimator::density(VectorView x) const {
  const auto idx = nearest(x);
  const double h = config_.bandwidth;
  double s = 0.0;
  for (auto i : idx) s += std::exp(-distance(x, refs_[i]) / h);
  return s / static_cast<double>(idx.size());
}

Vector MimicryEstimator::density_grad(VectorView x) const {
  const auto idx = nearest(x);
  const double h = config_.bandwidth;
  const double n = static_cast<double>(idx.size());
  Vector g(x.size(), 0.0);
  if (config_.kernel == KdeKernel::Rbf) {
    for (auto i : idx) {
      const auto& r = refs_[i];
      const double c = -2.0 / (n * h) * std::exp(-squared_l2_distance(x, r) / h);
      for (std::size_t j = 0; j < x.size(); ++j) g[j] += c * (x[j] - r[j]);
    }
    return g;
  }
  const bool difference = config_.grad_form == KdeGradForm::Difference;
  for (auto i : idx) {
    const auto& r = refs_[i];
    const double c = -1.0 / (n * h) * std::exp(-l1_distance(x, r) / h);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - r[j];
      const double dir = difference ? diff : static_cast<double>((diff > 0.0) - (diff < 0.0));
      g[j] += c * dir;
    }
  }
  return g;
}

double lambda_guidance(std::size_t n, double bandwidth, double g_range) {
  if (!(g_range > 0.0)) throw std::invalid_argument("discriminant range must be positive");
  if (n == 0 || !(bandwidth > 0.0)) throw std::invalid_argument("lambda guidance needs n >= 1 and h > 0");
  return g_range * static_cast<double>(n) * bandwidth;
}

double lambda_guidance(const MimicryEstimator& est, double g_range) {
  return lambda_guidance(est.n_used(), est.config().bandwidth, g_range);
}

}  // namespace evasion
