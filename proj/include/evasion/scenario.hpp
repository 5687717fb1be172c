#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evasion/attack.hpp"
#include "evasion/data.hpp"
#include "evasion/mimicry.hpp"
#include "evasion/models.hpp"

namespace evasion {

/// Perfect knowledge descends on the target itself; limited knowledge trains
/// a surrogate on sampled (optionally target-relabeled) data and descends on it.
enum class Knowledge { Perfect, Limited };

std::string to_string(Knowledge k);
Knowledge knowledge_from_string(const std::string& s);

struct ScenarioSpec {
  Knowledge kind = Knowledge::Perfect;
  std::size_t n_surrogate = 100;
  bool relabel_with_target = true;
  ModelParams surrogate_params;
  std::size_t repeats = 5;
  std::uint64_t seed = 1;

  std::size_t effective_repeats() const { return kind == Knowledge::Perfect ? 1 : repeats; }
  void validate() const;
};

/// Surrogate parameters for a target: same family, heavy training-error
/// penalty for SVMs (C = 100, rbf gamma = 0.1), same hidden width for MLPs.
ModelParams default_surrogate_params(const ModelParams& target);

/// n_surrogate samples drawn without replacement from pool, relabeled by
/// target.predict when requested. Redraws up to 10 times if a class is missing.
Dataset build_surrogate(const Classifier& target, const Dataset& pool, const ScenarioSpec& spec,
                        std::uint64_t seed);

struct AttackRecord {
  std::size_t sample_index = 0;  // index into the attack set
  std::size_t repeat = 0;        // surrogate repeat, 0 under perfect knowledge
  AttackTrace trace;
  // Filled only when the trace distances decrease somewhere and a budget grid
  // was supplied: evasion outcome of a dedicated rerun per budget.
  std::vector<bool> per_budget_evaded;
};

struct ScenarioResult {
  Knowledge kind = Knowledge::Perfect;
  std::size_t repeats = 1;
  std::size_t n_malicious = 0;
  /// Malicious samples already labeled legitimate by the target at x0.
  std::vector<std::size_t> misclassified;
  std::vector<AttackRecord> records;
};

struct ScenarioInputs {
  const Classifier& target;
  /// Reference set for the mimicry term under perfect knowledge.
  const Dataset& target_train;
  /// Pool the limited-knowledge attacker samples surrogate data from.
  const Dataset& surrogate_pool;
  /// Samples to attack; only malicious ones are used.
  const Dataset& attack_set;
};

struct ScenarioOptions {
  MimicryConfig kde;
  std::vector<double> budget_grid;  // for per-budget reruns, optional
  std::size_t jobs = 1;
};

/// Attacks every malicious sample of the attack set that the target labels
/// malicious. `attack.mimicry` is ignored; the estimator is built from the
/// attacker's legitimate reference points when attack.lambda > 0.
ScenarioResult run_scenario(const ScenarioInputs& inputs, const AttackSpec& attack,
                            const ScenarioSpec& scenario, const ScenarioOptions& options);

}  // namespace evasion
