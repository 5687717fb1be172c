#include <cmath>

#include "evasion/models.hpp"
#include "evasion/rng.hpp"

namespace evasion {

MlpModel init_mlp(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  if (hidden == 0) throw ModelError("mlp requires at least one hidden unit");
  if (dim == 0) throw ModelError("mlp requires positive input width");
  Rng rng(seed);
  MlpModel m;
  m.hidden_weights.assign(hidden, Vector(dim));
  m.hidden_biases.resize(hidden);
  m.output_weights.resize(hidden);
  for (auto& row : m.hidden_weights)
    for (auto& v : row) v = rng.uniform(-0.5, 0.5);
  for (auto& v : m.hidden_biases) v = rng.uniform(-0.5, 0.5);
  for (auto& v : m.output_weights) v = rng.uniform(-0.5, 0.5);
  m.output_bias = rng.uniform(-0.5, 0.5);
  return m;
}

namespace {

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Forward {
  Vector delta;
  double h = 0.0;
};

Forward forward(const MlpModel& m, VectorView x) {
  Forward f;
  f.delta.resize(m.hidden_width());
  f.h = m.output_bias;
  for (std::size_t k = 0; k < m.hidden_width(); ++k) {
    f.delta[k] = sigmoid(dot(m.hidden_weights[k], x) + m.hidden_biases[k]);
    f.h += m.output_weights[k] * f.delta[k];
  }
  return f;
}

double target_of(Label y) { return y == Label::Malicious ? 1.0 : 0.0; }

}  // namespace

double mlp_loss(const MlpModel& model, const Dataset& data) {
  double total = 0.0;
  for (const auto& s : data.samples()) {
    const double h = forward(model, s.x).h;
    total += softplus(h) - target_of(s.y) * h;
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

MlpModel train_mlp(const Dataset& train, const MlpTrainOptions& options,
                   std::vector<double>* loss_history) {
  if (train.empty()) throw ModelError("mlp training set is empty");
  if (options.hidden == 0) throw ModelError("mlp needs at least one hidden unit");
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate))
    throw ModelError("mlp learning rate must be positive and finite");
  MlpModel m = init_mlp(train.dim(), options.hidden, options.seed);
  const std::size_t hidden = options.hidden;
  const double scale = options.learning_rate / static_cast<double>(train.size());

  if (loss_history) {
    loss_history->clear();
    loss_history->push_back(mlp_loss(m, train));
  }

  std::vector<Vector> grad_v(hidden, Vector(train.dim()));
  Vector grad_bk(hidden), grad_w(hidden);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (auto& row : grad_v) std::fill(row.begin(), row.end(), 0.0);
    std::fill(grad_bk.begin(), grad_bk.end(), 0.0);
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;

    for (const auto& s : train.samples()) {
      const Forward f = forward(m, s.x);
      const double t = target_of(s.y);
      loss += softplus(f.h) - t * f.h;
      const double err = sigmoid(f.h) - t;  // dL/dh
      grad_b += err;
      for (std::size_t k = 0; k < hidden; ++k) {
        grad_w[k] += err * f.delta[k];
        const double dk = err * m.output_weights[k] * f.delta[k] * (1.0 - f.delta[k]);
        grad_bk[k] += dk;
        if (dk != 0.0) axpy(dk, s.x, grad_v[k]);
      }
    }
    if (!std::isfinite(loss))
      throw ModelError("mlp training diverged: non-finite loss at epoch " + std::to_string(epoch));

    for (std::size_t k = 0; k < hidden; ++k) {
      axpy(-scale, grad_v[k], m.hidden_weights[k]);
      m.hidden_biases[k] -= scale * grad_bk[k];
      m.output_weights[k] -= scale * grad_w[k];
    }
    m.output_bias -= scale * grad_b;

    if (loss_history) {
      const double after = mlp_loss(m, train);
      if (!std::isfinite(after))
        throw ModelError("mlp training diverged: non-finite loss at epoch " + std::to_string(epoch));
      loss_history->push_back(after);
    }
  }
  return m;
}

}  // namespace evasion
