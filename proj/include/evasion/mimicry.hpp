#pragma once

#include <string>
#include <vector>

#include "evasion/vector_ops.hpp"

namespace evasion {

/// Laplacian uses the l1 distance, Rbf the squared l2 distance: exp(-d(x, xi) / h).
enum class KdeKernel { Laplacian, Rbf };

/// Which laplacian gradient to use. `Corrected` is the true subgradient using
/// sign(x - xi); `Difference` multiplies by (x - xi) instead.
enum class KdeGradForm { Corrected, Difference };

std::string to_string(KdeKernel k);
KdeKernel kde_kernel_from_string(const std::string& s);
std::string to_string(KdeGradForm f);
KdeGradForm kde_grad_form_from_string(const std::string& s);

struct MimicryConfig {
  KdeKernel kernel = KdeKernel::Laplacian;
  double bandwidth = 10.0;
  std::size_t truncation_k = 50;
  KdeGradForm grad_form = KdeGradForm::Corrected;
};

/// Kernel density estimate over legitimate reference points, averaged over
/// the truncation_k references nearest to each query point.
class MimicryEstimator {
 public:
  MimicryEstimator(std::vector<Vector> reference_points, MimicryConfig config);

  double density(VectorView x) const;
  Vector density_grad(VectorView x) const;

  const MimicryConfig& config() const { return config_; }
  const std::vector<Vector>& reference_points() const { return refs_; }
  std::size_t dim() const { return refs_.front().size(); }
  /// Number of references entering each sum: min(truncation_k, |refs|).
  std::size_t n_used() const;

 private:
  double distance(VectorView x, VectorView xi) const;
  /// Indices of the n_used nearest references, ties broken by index.
  std::vector<std::size_t> nearest(VectorView x) const;

  std::vector<Vector> refs_;
  MimicryConfig config_;
};

/// Smallest lambda with lambda / (n h) equal to the discriminant range.
double lambda_guidance(std::size_t n, double bandwidth, double g_range);
double lambda_guidance(const MimicryEstimator& est, double g_range);

}  // namespace evasion
