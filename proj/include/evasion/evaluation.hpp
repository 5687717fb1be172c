#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evasion/attack.hpp"
#include "evasion/data.hpp"
#include "evasion/mimicry.hpp"
#include "evasion/models.hpp"
#include "evasion/scenario.hpp"

namespace evasion {

/// Smallest threshold theta with fraction{score >= theta} <= fp_target.
double calibrate_threshold(std::span<const double> legit_scores, double fp_target);

/// fraction{score >= theta}
double realized_fp(std::span<const double> legit_scores, double theta);

/// Whether the attacker of `record` evades within budget d_max: some trace
/// point reachable without exceeding d_max (running max of distances) is
/// labeled legitimate at theta. Records carrying per-budget reruns are looked
/// up in budget_grid instead.
bool evades_within(const AttackRecord& record, double theta, double d_max,
                   std::span<const double> budget_grid = {});

/// FN rate of one surrogate repeat at budget d_max. Misclassified samples
/// count as false negatives at every budget.
double fn_rate_under_attack(const ScenarioResult& result, std::size_t repeat, double theta, double d_max,
                            std::span<const double> budget_grid = {});

/// FN rate per budget, averaged over surrogate repeats.
std::vector<double> fn_curve(const ScenarioResult& result, double theta, std::span<const double> d_max_grid);

struct CurvePoint {
  double d_max = 0.0;
  double mean_fn = 0.0;
  double std_fn = 0.0;
};

struct SecurityCurve {
  std::string classifier;
  Knowledge scenario = Knowledge::Perfect;
  double lambda = 0.0;
  double fp_target = 0.0;
  std::vector<CurvePoint> points;
  /// Per-split FN values, [split][budget index]; mean/std are computed from these.
  std::vector<std::vector<double>> per_split;
  std::vector<std::size_t> split_ids;

  void validate() const;
  bool monotone() const;
  /// mean_fn at the given budget; throws if the budget is not on the curve.
  double fn_at(double d_max) const;
};

/// Mean and population standard deviation across splits.
SecurityCurve aggregate_curve(std::string classifier, Knowledge scenario, double lambda, double fp_target,
                              std::span<const double> d_max_grid, std::vector<std::vector<double>> per_split,
                              std::vector<std::size_t> split_ids);

enum class CalibrationSet { Test, Train };

std::string to_string(CalibrationSet c);
CalibrationSet calibration_set_from_string(const std::string& s);

struct SurrogateOverrides {
  std::optional<double> C;
  std::optional<double> gamma;
  bool gamma_from_target = false;  // rbf surrogates reuse the target's gamma
};

struct SweepSpec {
  std::vector<ModelParams> models;
  std::vector<ScenarioSpec> scenarios;
  SurrogateOverrides surrogate;
  AttackSpec attack;  // d_max is replaced by the largest grid value
  MimicryConfig kde;
  std::vector<double> lambdas{0.0};
  std::vector<double> d_max_grid;
  double fp_target = 0.005;
  CalibrationSet calibration = CalibrationSet::Test;
  std::size_t jobs = 1;

  void validate() const;
};

struct SplitData {
  Dataset train;
  Dataset test;
};

struct RawResult {
  std::string classifier;
  Knowledge scenario = Knowledge::Perfect;
  double lambda = 0.0;
  std::size_t split = 0;
  double d_max = 0.0;
  double fn = 0.0;
};

struct CellSummary {
  std::string classifier;
  std::size_t split = 0;
  double threshold = 0.0;
  double train_accuracy = 0.0;
  double clean_fn = 0.0;
  double clean_fp = 0.0;
};

struct CellFailure {
  std::string classifier;
  std::size_t split = 0;
  std::string message;
};

struct SweepResult {
  std::vector<SecurityCurve> curves;
  std::vector<RawResult> raw;
  std::vector<CellSummary> cells;
  std::vector<CellFailure> failures;
};

/// Trains every model on every split, calibrates the threshold, runs every
/// scenario for every lambda and aggregates FN per budget across splits.
SweepResult sweep(const std::vector<SplitData>& splits, const SweepSpec& spec);

}  // namespace evasion
