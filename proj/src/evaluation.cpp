#include "evasion/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include "evasion/parallel.hpp"

namespace evasion {

double calibrate_threshold(std::span<const double> legit_scores, double fp_target) {
  if (legit_scores.empty()) throw std::invalid_argument("calibration needs at least one legitimate score");
  if (!(fp_target >= 0.0 && fp_target < 1.0)) throw std::invalid_argument("fp_target must lie in [0, 1)");
  std::vector<double> s(legit_scores.begin(), legit_scores.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  // At most k scores may reach the threshold; it sits just above the (k+1)-th largest.
  const auto k = static_cast<std::size_t>(std::floor(fp_target * static_cast<double>(s.size()) + 1e-9));
  return std::nextafter(s[k], std::numeric_limits<double>::infinity());
}

double realized_fp(std::span<const double> legit_scores, double theta) {
  if (legit_scores.empty()) return 0.0;
  const auto n = std::count_if(legit_scores.begin(), legit_scores.end(), [theta](double v) { return v >= theta; });
  return static_cast<double>(n) / static_cast<double>(legit_scores.size());
}

bool evades_within(const AttackRecord& record, double theta, double d_max, std::span<const double> budget_grid) {
  if (!record.per_budget_evaded.empty()) {
    for (std::size_t i = 0; i < budget_grid.size() && i < record.per_budget_evaded.size(); ++i)
      if (std::abs(budget_grid[i] - d_max) <= 1e-12) return record.per_budget_evaded[i];
    throw std::invalid_argument("budget " + std::to_string(d_max) + " was not part of the rerun grid");
  }
  const auto& t = record.trace;
  double reach = 0.0;
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    reach = std::max(reach, t.distances[i]);
    if (reach > d_max + 1e-9) break;
    if (predict_from_score(t.g_target[i], theta) == Label::Legitimate) return true;
  }
  return false;
}

double fn_rate_under_attack(const ScenarioResult& result, std::size_t repeat, double theta, double d_max,
                            std::span<const double> budget_grid) {
  if (result.n_malicious == 0) throw std::invalid_argument("no malicious samples to evaluate");
  std::size_t fn = result.misclassified.size();
  for (const auto& rec : result.records)
    if (rec.repeat == repeat && evades_within(rec, theta, d_max, budget_grid)) ++fn;
  return static_cast<double>(fn) / static_cast<double>(result.n_malicious);
}

std::vector<double> fn_curve(const ScenarioResult& result, double theta, std::span<const double> d_max_grid) {
  std::vector<double> out(d_max_grid.size(), 0.0);
  for (std::size_t r = 0; r < result.repeats; ++r)
    for (std::size_t i = 0; i < d_max_grid.size(); ++i)
      out[i] += fn_rate_under_attack(result, r, theta, d_max_grid[i], d_max_grid);
  for (auto& v : out) v /= static_cast<double>(result.repeats);
  return out;
}

void SecurityCurve::validate() const {
  if (points.empty()) throw std::logic_error("security curve has no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].mean_fn < 0.0 || points[i].mean_fn > 1.0) throw std::logic_error("FN rate outside [0, 1]");
    if (i > 0 && !(points[i].d_max > points[i - 1].d_max))
      throw std::logic_error("security curve budgets must be strictly increasing");
  }
}

bool SecurityCurve::monotone() const {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].mean_fn < points[i - 1].mean_fn) return false;
  for (const auto& row : per_split)
    for (std::size_t i = 1; i < row.size(); ++i)
      if (row[i] < row[i - 1]) return false;
  return true;
}

double SecurityCurve::fn_at(double d_max) const {
  for (const auto& p : points)
    if (std::abs(p.d_max - d_max) <= 1e-12) return p.mean_fn;
  throw std::invalid_argument("budget " + std::to_string(d_max) + " is not on the curve");
}

SecurityCurve aggregate_curve(std::string classifier, Knowledge scenario, double lambda, double fp_target,
                              std::span<const double> d_max_grid, std::vector<std::vector<double>> per_split,
                              std::vector<std::size_t> split_ids) {
  SecurityCurve c;
  c.classifier = std::move(classifier);
  c.scenario = scenario;
  c.lambda = lambda;
  c.fp_target = fp_target;
  const auto n = static_cast<double>(per_split.size());
  for (std::size_t i = 0; i < d_max_grid.size(); ++i) {
    double mean = 0.0;
    for (const auto& row : per_split) mean += row[i];
    mean /= n;
    double var = 0.0;
    for (const auto& row : per_split) var += (row[i] - mean) * (row[i] - mean);
    c.points.push_back({d_max_grid[i], mean, std::sqrt(var / n)});
  }
  c.per_split = std::move(per_split);
  c.split_ids = std::move(split_ids);
  c.validate();
  return c;
}

std::string to_string(CalibrationSet c) { return c == CalibrationSet::Test ? "test" : "train"; }

CalibrationSet calibration_set_from_string(const std::string& s) {
  if (s == "test") return CalibrationSet::Test;
  if (s == "train") return CalibrationSet::Train;
  throw std::invalid_argument("unknown calibration set '" + s + "', expected test|train");
}

void SweepSpec::validate() const {
  if (models.empty()) throw std::invalid_argument("model grid is empty");
  if (scenarios.empty()) throw std::invalid_argument("scenario list is empty");
  if (lambdas.empty()) throw std::invalid_argument("lambda list is empty");
  if (d_max_grid.empty()) throw std::invalid_argument("d_max grid is empty");
  for (std::size_t i = 1; i < d_max_grid.size(); ++i)
    if (!(d_max_grid[i] > d_max_grid[i - 1])) throw std::invalid_argument("d_max grid must be strictly increasing");
  if (d_max_grid.front() < 0.0) throw std::invalid_argument("d_max grid must be nonnegative");
  for (const auto& s : scenarios) s.validate();
}

namespace {

struct CellOutput {
  CellSummary summary;
  // (scenario index, lambda index) -> FN per budget
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> fn;
};

CellOutput run_cell(const SplitData& split, const ModelParams& params, const SweepSpec& spec) {
  CellOutput out;
  const TrainedModel trained = train_model(split.train, params);
  const Dataset& calib = spec.calibration == CalibrationSet::Test ? split.test : split.train;
  std::vector<double> legit_scores;
  for (const auto& s : calib.samples())
    if (s.y == Label::Legitimate) legit_scores.push_back(trained.discriminant(s.x));
  const double theta = calibrate_threshold(legit_scores, spec.fp_target);
  const TrainedModel target = trained.with_offset(theta);

  out.summary.classifier = params.descriptor();
  out.summary.threshold = theta;
  out.summary.train_accuracy = accuracy(target, split.train);
  out.summary.clean_fp = realized_fp(legit_scores, theta);

  AttackSpec attack = spec.attack;
  attack.d_max = spec.d_max_grid.back();
  const ScenarioInputs inputs{target, split.train, split.test, split.test};
  ScenarioOptions opts{spec.kde, spec.d_max_grid, 1};

  for (std::size_t si = 0; si < spec.scenarios.size(); ++si) {
    ScenarioSpec scenario = spec.scenarios[si];
    scenario.surrogate_params = default_surrogate_params(params);
    if (spec.surrogate.C) scenario.surrogate_params.C = *spec.surrogate.C;
    if (spec.surrogate.gamma && scenario.surrogate_params.kernel.kind == KernelKind::Rbf)
      scenario.surrogate_params.kernel.gamma = *spec.surrogate.gamma;
    if (spec.surrogate.gamma_from_target && scenario.surrogate_params.kernel.kind == KernelKind::Rbf)
      scenario.surrogate_params.kernel.gamma = params.kernel.gamma;
    for (std::size_t li = 0; li < spec.lambdas.size(); ++li) {
      attack.lambda = spec.lambdas[li];
      const ScenarioResult res = run_scenario(inputs, attack, scenario, opts);
      out.fn[{si, li}] = fn_curve(res, theta, spec.d_max_grid);
      if (si == 0 && li == 0)
        out.summary.clean_fn = fn_rate_under_attack(res, 0, theta, 0.0, spec.d_max_grid);
    }
  }
  return out;
}

}  // namespace

SweepResult sweep(const std::vector<SplitData>& splits, const SweepSpec& spec) {
  spec.validate();
  if (splits.empty()) throw std::invalid_argument("no splits to sweep over");

  const std::size_t n_models = spec.models.size();
  const std::size_t n_cells = splits.size() * n_models;
  std::vector<std::optional<CellOutput>> outputs(n_cells);
  std::vector<std::string> errors(n_cells);

  parallel_for(n_cells, spec.jobs, [&](std::size_t c) {
    const std::size_t split = c / n_models;
    const std::size_t model = c % n_models;
    try {
      outputs[c] = run_cell(splits[split], spec.models[model], spec);
      outputs[c]->summary.split = split;
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  });

  SweepResult result;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const std::size_t split = c / n_models;
    const std::string name = spec.models[c % n_models].descriptor();
    if (!outputs[c]) {
      result.failures.push_back({name, split, errors[c]});
      continue;
    }
    result.cells.push_back(outputs[c]->summary);
    for (const auto& [key, fns] : outputs[c]->fn)
      for (std::size_t i = 0; i < fns.size(); ++i)
        result.raw.push_back({name, spec.scenarios[key.first].kind, spec.lambdas[key.second], split,
                              spec.d_max_grid[i], fns[i]});
  }

  for (std::size_t m = 0; m < n_models; ++m) {
    const std::string name = spec.models[m].descriptor();
    for (std::size_t si = 0; si < spec.scenarios.size(); ++si) {
      for (std::size_t li = 0; li < spec.lambdas.size(); ++li) {
        std::vector<std::vector<double>> per_split;
        std::vector<std::size_t> ids;
        for (std::size_t split = 0; split < splits.size(); ++split) {
          const auto& out = outputs[split * n_models + m];
          if (!out) continue;
          per_split.push_back(out->fn.at({si, li}));
          ids.push_back(split);
        }
        if (per_split.empty()) continue;
        result.curves.push_back(aggregate_curve(name, spec.scenarios[si].kind, spec.lambdas[li], spec.fp_target,
                                                spec.d_max_grid, std::move(per_split), std::move(ids)));
      }
    }
  }
  return result;
}

}  // namespace evasion
