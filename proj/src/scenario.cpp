#include "evasion/scenario.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <optional>

#include "evasion/parallel.hpp"
#include "evasion/rng.hpp"

namespace evasion {

std::string to_string(Knowledge k) { return k == Knowledge::Perfect ? "PK" : "LK"; }

Knowledge knowledge_from_string(const std::string& s) {
  if (s == "PK" || s == "pk" || s == "perfect") return Knowledge::Perfect;
  if (s == "LK" || s == "lk" || s == "limited") return Knowledge::Limited;
  throw std::invalid_argument("unknown scenario kind '" + s + "', expected PK|LK");
}

void ScenarioSpec::validate() const {
  if (kind == Knowledge::Limited) {
    if (n_surrogate < 2) throw std::invalid_argument("limited knowledge requires n_surrogate >= 2");
    if (repeats == 0) throw std::invalid_argument("limited knowledge requires at least one repeat");
  }
}

ModelParams default_surrogate_params(const ModelParams& target) {
  ModelParams p = target;
  if (p.kind == ModelKind::LinearSvm || p.kind == ModelKind::KernelSvm) {
    p.C = 100.0;
    if (p.kernel.kind == KernelKind::Rbf) p.kernel.gamma = 0.1;
  }
  return p;
}

Dataset build_surrogate(const Classifier& target, const Dataset& pool, const ScenarioSpec& spec,
                        std::uint64_t seed) {
  if (pool.size() < spec.n_surrogate)
    throw std::invalid_argument("surrogate pool has " + std::to_string(pool.size()) +
                                " samples, need " + std::to_string(spec.n_surrogate));
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    idx.resize(spec.n_surrogate);
    std::sort(idx.begin(), idx.end());
    Dataset drawn = pool.subset(idx);
    if (spec.relabel_with_target) {
      std::vector<Label> labels;
      labels.reserve(drawn.size());
      for (const auto& s : drawn.samples()) labels.push_back(target.predict(s.x));
      drawn = drawn.relabeled(labels);
    }
    if (drawn.has_both_classes()) return drawn;
  }
  throw std::runtime_error("surrogate data lacks one class after " + std::to_string(kAttempts) + " draws");
}

namespace {

std::vector<Vector> legitimate_as_labeled_by(const Classifier& model, const Dataset& data) {
  std::vector<Vector> out;
  for (const auto& s : data.samples())
    if (model.predict(s.x) == Label::Legitimate) out.push_back(s.x);
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioInputs& inputs, const AttackSpec& attack,
                            const ScenarioSpec& scenario, const ScenarioOptions& options) {
  scenario.validate();
  const Classifier& target = inputs.target;

  ScenarioResult result;
  result.kind = scenario.kind;
  result.repeats = scenario.effective_repeats();

  std::vector<std::size_t> attacked;
  for (std::size_t i = 0; i < inputs.attack_set.size(); ++i) {
    const auto& s = inputs.attack_set[i];
    if (s.y != Label::Malicious) continue;
    ++result.n_malicious;
    if (target.predict(s.x) == Label::Legitimate) result.misclassified.push_back(i);
    else attacked.push_back(i);
  }

  for (std::size_t r = 0; r < result.repeats; ++r) {
    std::optional<TrainedModel> surrogate;
    std::vector<Vector> refs;
    if (scenario.kind == Knowledge::Limited) {
      const Dataset data = build_surrogate(target, inputs.surrogate_pool, scenario, Rng::derive(scenario.seed, r));
      surrogate.emplace(train_model(data, scenario.surrogate_params));
      if (attack.lambda > 0.0) refs = data.points_with_label(Label::Legitimate);
    } else if (attack.lambda > 0.0) {
      refs = legitimate_as_labeled_by(target, inputs.target_train);
    }
    const Classifier& descent = surrogate ? static_cast<const Classifier&>(*surrogate) : target;

    AttackSpec spec = attack;
    spec.mimicry.reset();
    if (attack.lambda > 0.0) {
      if (refs.empty()) throw std::runtime_error("no legitimate reference points for the mimicry term");
      spec.mimicry = std::make_shared<const MimicryEstimator>(std::move(refs), options.kde);
    }

    std::vector<AttackRecord> records(attacked.size());
    parallel_for(attacked.size(), options.jobs, [&](std::size_t k) {
      const auto& x0 = inputs.attack_set[attacked[k]].x;
      AttackRecord rec{attacked[k], r, evade(descent, spec, x0), {}};
      judge_trace(rec.trace, target);
      if (!options.budget_grid.empty() && !rec.trace.distances_nondecreasing()) {
        for (double b : options.budget_grid) {
          AttackSpec at_budget = spec;
          at_budget.d_max = b;
          AttackTrace t = evade(descent, at_budget, x0);
          judge_trace(t, target);
          rec.per_budget_evaded.push_back(t.first_evading().has_value());
        }
      }
      records[k] = std::move(rec);
    });
    for (auto& rec : records) result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace evasion
