#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "evasion/data.hpp"
#include "evasion/kernel.hpp"
#include "evasion/vector_ops.hpp"

namespace evasion {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Read-only view of a differentiable two-class classifier.
///
/// The attack engine only ever sees this interface; a caller that wants to
/// audit which parts of a model are touched can wrap it.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t dim() const = 0;
  /// Continuous score g(x); larger means more malicious.
  virtual double discriminant(VectorView x) const = 0;
  /// Exact gradient of discriminant at x.
  virtual Vector discriminant_grad(VectorView x) const = 0;
  /// Threshold subtracted from g before taking the sign.
  virtual double decision_offset() const = 0;

  /// +1 iff g(x) - offset >= 0 (ties go to the malicious class).
  virtual Label predict(VectorView x) const;
};

/// Label of score g under a threshold, tie -> Malicious.
inline Label predict_from_score(double g, double decision_offset) {
  return g - decision_offset >= 0.0 ? Label::Malicious : Label::Legitimate;
}

struct LinearModel {
  Vector w;
  double b = 0.0;

  double discriminant(VectorView x) const;
  Vector gradient(VectorView x) const;
};

struct SvmModel {
  KernelSpec kernel;
  std::vector<Vector> support_vectors;
  Vector dual_coefs;  // alpha_i * y_i
  double b = 0.0;
  double C = 1.0;

  double discriminant(VectorView x) const;
  Vector gradient(VectorView x) const;
  void validate() const;
};

/// Single hidden layer, sigmoid activations on both layers.
struct MlpModel {
  std::vector<Vector> hidden_weights;  // m rows of length d
  Vector hidden_biases;                // m
  Vector output_weights;               // m
  double output_bias = 0.0;

  std::size_t hidden_width() const { return hidden_biases.size(); }
  std::size_t dim() const { return hidden_weights.empty() ? 0 : hidden_weights.front().size(); }
  double discriminant(VectorView x) const;
  Vector gradient(VectorView x) const;
  void validate() const;
};

double sigmoid(double z);

class TrainedModel final : public Classifier {
 public:
  using Variant = std::variant<LinearModel, SvmModel, MlpModel>;

  TrainedModel(Variant model, double decision_offset);
  /// Uses the default offset for the family: 0.5 for MLPs, 0 otherwise.
  explicit TrainedModel(Variant model);

  std::size_t dim() const override { return dim_; }
  double discriminant(VectorView x) const override;
  Vector discriminant_grad(VectorView x) const override;
  double decision_offset() const override { return decision_offset_; }

  TrainedModel with_offset(double offset) const { return TrainedModel(model_, offset); }
  const Variant& model() const { return model_; }
  std::string kind_name() const;

 private:
  Variant model_;
  double decision_offset_;
  std::size_t dim_;
};

Label predict(const Classifier& model, VectorView x, double decision_offset);

// --- training ---------------------------------------------------------------

struct SvmTrainResult {
  SvmModel model;
  Vector alphas;  // one per training sample, in [0, C]
  std::size_t iterations = 0;
  double final_gap = 0.0;  // maximal violating pair gap at exit
};

/// SMO dual solver with maximal-violating-pair working set selection.
SvmTrainResult train_svm_dual(const Dataset& train, const KernelSpec& kernel, double C,
                              double tolerance = 1e-3, std::size_t max_iterations = 10'000'000);

SvmModel train_kernel_svm(const Dataset& train, const KernelSpec& kernel, double C,
                          double tolerance = 1e-3);

LinearModel train_linear_svm(const Dataset& train, double C, double tolerance = 1e-3);

/// w = sum_i coef_i x_i for a linear-kernel SVM.
LinearModel collapse_linear(const SvmModel& svm);

struct MlpTrainOptions {
  std::size_t hidden = 5;
  std::size_t epochs = 1000;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
};

/// Seeded U(-0.5, 0.5) initialization.
MlpModel init_mlp(std::size_t dim, std::size_t hidden, std::uint64_t seed);

/// Mean logistic loss with targets (y + 1) / 2.
double mlp_loss(const MlpModel& model, const Dataset& data);

/// Full-batch gradient descent on mlp_loss. Optionally records the loss per epoch
/// (entry 0 is the loss of the initial model).
MlpModel train_mlp(const Dataset& train, const MlpTrainOptions& options,
                   std::vector<double>* loss_history = nullptr);

enum class ModelKind { LinearSvm, KernelSvm, Mlp };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Hyperparameters of one grid cell.
struct ModelParams {
  ModelKind kind = ModelKind::LinearSvm;
  double C = 1.0;
  KernelSpec kernel = KernelSpec::rbf(1.0);
  MlpTrainOptions mlp;
  double svm_tolerance = 1e-3;

  std::string descriptor() const;
};

TrainedModel train_model(const Dataset& train, const ModelParams& params);

double accuracy(const Classifier& model, const Dataset& data);

// --- persistence --------------------------------------------------------------

inline constexpr const char* kModelFormatVersion = "evasion-model/1";

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace evasion
