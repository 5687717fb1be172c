#include "evasion/models.hpp"

#include <cmath>
#include <sstream>

namespace evasion {

Label Classifier::predict(VectorView x) const {
  return predict_from_score(discriminant(x), decision_offset());
}

Label predict(const Classifier& model, VectorView x, double decision_offset) {
  return predict_from_score(model.discriminant(x), decision_offset);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LinearModel::discriminant(VectorView x) const {
  require_same_dim(w, x);
  return dot(w, x) + b;
}

Vector LinearModel::gradient(VectorView x) const {
  require_same_dim(w, x);
  return w;
}

double SvmModel::discriminant(VectorView x) const {
  double s = b;
  for (std::size_t i = 0; i < support_vectors.size(); ++i)
    s += dual_coefs[i] * kernel_eval(kernel, x, support_vectors[i]);
  return s;
}

Vector SvmModel::gradient(VectorView x) const {
  Vector g(x.size(), 0.0);
  for (std::size_t i = 0; i < support_vectors.size(); ++i)
    kernel_grad_accumulate(kernel, x, support_vectors[i], dual_coefs[i], g);
  return g;
}

void SvmModel::validate() const {
  kernel.validate();
  if (support_vectors.empty()) throw ModelError("svm has no support vectors");
  if (support_vectors.size() != dual_coefs.size())
    throw ModelError("svm support vector / coefficient count mismatch");
  const auto d = support_vectors.front().size();
  for (const auto& sv : support_vectors) {
    if (sv.size() != d) throw ModelError("svm support vectors have inconsistent width");
    if (!all_finite(sv)) throw ModelError("svm support vector has non-finite value");
  }
  if (!all_finite(dual_coefs) || !std::isfinite(b)) throw ModelError("svm has non-finite coefficient");
}

double MlpModel::discriminant(VectorView x) const {
  require_same_dim(hidden_weights.front(), x);
  double h = output_bias;
  for (std::size_t k = 0; k < hidden_width(); ++k)
    h += output_weights[k] * sigmoid(dot(hidden_weights[k], x) + hidden_biases[k]);
  return sigmoid(h);
}

Vector MlpModel::gradient(VectorView x) const {
  require_same_dim(hidden_weights.front(), x);
  const std::size_t m = hidden_width();
  Vector delta(m);
  double h = output_bias;
  for (std::size_t k = 0; k < m; ++k) {
    delta[k] = sigmoid(dot(hidden_weights[k], x) + hidden_biases[k]);
    h += output_weights[k] * delta[k];
  }
  const double g = sigmoid(h);
  const double outer = g * (1.0 - g);
  Vector grad(x.size(), 0.0);
  if (outer == 0.0) return grad;
  for (std::size_t k = 0; k < m; ++k) {
    const double c = outer * output_weights[k] * delta[k] * (1.0 - delta[k]);
    if (c != 0.0) axpy(c, hidden_weights[k], grad);
  }
  return grad;
}

void MlpModel::validate() const {
  const std::size_t m = hidden_biases.size();
  if (m == 0) throw ModelError("mlp has no hidden units");
  if (hidden_weights.size() != m || output_weights.size() != m)
    throw ModelError("mlp layer shapes are inconsistent");
  const auto d = hidden_weights.front().size();
  if (d == 0) throw ModelError("mlp has zero input width");
  for (const auto& row : hidden_weights) {
    if (row.size() != d) throw ModelError("mlp hidden weight rows have inconsistent width");
    if (!all_finite(row)) throw ModelError("mlp has non-finite weight");
  }
  if (!all_finite(hidden_biases) || !all_finite(output_weights) || !std::isfinite(output_bias))
    throw ModelError("mlp has non-finite weight");
}

namespace {

std::size_t variant_dim(const TrainedModel::Variant& v) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          if (m.w.empty() || !all_finite(m.w) || !std::isfinite(m.b))
            throw ModelError("linear model weights must be non-empty and finite");
          return m.w.size();
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          m.validate();
          return m.support_vectors.front().size();
        } else {
          m.validate();
          return m.dim();
        }
      },
      v);
}

}  // namespace

TrainedModel::TrainedModel(Variant model, double decision_offset)
    : model_(std::move(model)), decision_offset_(decision_offset), dim_(variant_dim(model_)) {}

TrainedModel::TrainedModel(Variant model)
    : TrainedModel(std::move(model), 0.0) {
  if (std::holds_alternative<MlpModel>(model_)) decision_offset_ = 0.5;
}

double TrainedModel::discriminant(VectorView x) const {
  if (x.size() != dim_) throw DimensionError(dim_, x.size());
  return std::visit([&](const auto& m) { return m.discriminant(x); }, model_);
}

Vector TrainedModel::discriminant_grad(VectorView x) const {
  if (x.size() != dim_) throw DimensionError(dim_, x.size());
  return std::visit([&](const auto& m) { return m.gradient(x); }, model_);
}

std::string TrainedModel::kind_name() const {
  switch (model_.index()) {
    case 0: return "linear";
    case 1: return "svm";
    default: return "mlp";
  }
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LinearSvm: return "linear_svm";
    case ModelKind::KernelSvm: return "kernel_svm";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear_svm" || s == "linear") return ModelKind::LinearSvm;
  if (s == "kernel_svm" || s == "svm" || s == "rbf_svm") return ModelKind::KernelSvm;
  if (s == "mlp") return ModelKind::Mlp;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

std::string ModelParams::descriptor() const {
  std::ostringstream out;
  switch (kind) {
    case ModelKind::LinearSvm:
      out << "linear_svm_C" << C;
      break;
    case ModelKind::KernelSvm:
      out << to_string(kernel.kind) << "_svm_C" << C;
      if (kernel.kind == KernelKind::Rbf) out << "_gamma" << kernel.gamma;
      if (kernel.kind == KernelKind::Polynomial) out << "_p" << kernel.degree << "_c" << kernel.coef0;
      break;
    case ModelKind::Mlp:
      out << "mlp_m" << mlp.hidden;
      break;
  }
  return out.str();
}

TrainedModel train_model(const Dataset& train, const ModelParams& params) {
  switch (params.kind) {
    case ModelKind::LinearSvm:
      return TrainedModel(train_linear_svm(train, params.C, params.svm_tolerance));
    case ModelKind::KernelSvm:
      return TrainedModel(train_kernel_svm(train, params.kernel, params.C, params.svm_tolerance));
    case ModelKind::Mlp:
      return TrainedModel(train_mlp(train, params.mlp));
  }
  throw ModelError("unknown model kind");
}

double accuracy(const Classifier& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& s : data.samples()) ok += model.predict(s.x) == s.y ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

}  // namespace evasion
