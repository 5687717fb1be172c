#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evasion/vector_ops.hpp"

namespace evasion {

/// Class label. Legitimate samples are -1, malicious samples are +1.
enum class Label : int { Legitimate = -1, Malicious = +1 };

inline double label_value(Label y) { return static_cast<double>(static_cast<int>(y)); }

/// Maps -1/0 to Legitimate and +1 to Malicious; anything else is rejected.
std::optional<Label> label_from_value(double v);

struct Sample {
  Vector x;
  Label y;
};

/// Error raised by loaders, with the offending file position when known.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Immutable collection of labeled samples sharing one dimensionality.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<Sample> samples,
          std::vector<std::string> feature_names = {});

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::size_t count(Label y) const;
  bool has_both_classes() const {
    return count(Label::Legitimate) > 0 && count(Label::Malicious) > 0;
  }

  /// Subset in the given index order.
  Dataset subset(const std::vector<std::size_t>& indices) const;
  /// Same points with replaced labels.
  Dataset relabeled(const std::vector<Label>& labels) const;
  /// Feature vectors of all samples carrying label y.
  std::vector<Vector> points_with_label(Label y) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Sample> samples_;
  std::vector<std::string> feature_names_;
};

/// Per-feature box plus the increment-only flag (x0 <= x).
struct FeatureBounds {
  Vector lower;
  Vector upper;
  bool increment_only = false;

  static FeatureBounds unbounded(std::size_t dim) {
    return {Vector(dim, -std::numeric_limits<double>::infinity()),
            Vector(dim, std::numeric_limits<double>::infinity()), false};
  }
  static FeatureBounds box(std::size_t dim, double lo, double hi,
                           bool increment_only = false) {
    return {Vector(dim, lo), Vector(dim, hi), increment_only};
  }

  std::size_t dim() const { return lower.size(); }
  void validate() const;
  /// True when x lies in the box and, if increment_only, x >= x0.
  bool contains(VectorView x0, VectorView x, double tol = 1e-9) const;
};

Dataset load_dense_csv(const std::filesystem::path& path,
                       const std::string& label_column = "label");
void write_dense_csv(const Dataset& ds, const std::filesystem::path& path);

/// `label index:value ...` with 1-based indices. dim 0 infers the width.
Dataset load_sparse(const std::filesystem::path& path, std::size_t dim = 0);

/// MNIST IDX pair filtered to two digits; class_pos maps to +1, pixels / 255.
Dataset load_idx_images(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, int class_neg,
                        int class_pos);

/// Stratified disjoint split; deterministic given seed.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, std::size_t n_train,
                                             std::size_t n_test, std::uint64_t seed);

Dataset cap_features(const Dataset& ds, double cap);

}  // namespace evasion
