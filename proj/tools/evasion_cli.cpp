// Command-line driver: train | attack | sweep | export-digits.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "evasion/config.hpp"
#include "evasion/parallel.hpp"
#include "evasion/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evasion;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  long jobs = -1;
};

ExperimentConfig load(const Common& c) {
  json root = read_json_file(c.config_path);
  for (const auto& o : c.overrides) apply_override(root, o);
  ExperimentConfig cfg = parse_config(root);
  if (!c.out.empty()) cfg.output = c.out;
  if (c.jobs >= 0) cfg.sweep.jobs = static_cast<std::size_t>(c.jobs);
  check_files(cfg);
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

void echo_config(const ExperimentConfig& cfg) { write_json(cfg.output / "config.resolved.json", config_to_json(cfg)); }

std::string model_file_name(const ModelParams& p, std::size_t split) {
  return p.descriptor() + "__split" + std::to_string(split) + ".json";
}

double calibrated_threshold(const Classifier& model, const SplitData& split, const SweepSpec& spec) {
  const Dataset& calib = spec.calibration == CalibrationSet::Test ? split.test : split.train;
  std::vector<double> scores;
  for (const auto& s : calib.samples())
    if (s.y == Label::Legitimate) scores.push_back(model.discriminant(s.x));
  return calibrate_threshold(scores, spec.fp_target);
}

int cmd_train(const Common& common) {
  const ExperimentConfig cfg = load(common);
  const auto splits = make_splits(cfg);
  const auto& models = cfg.sweep.models;
  const std::size_t n_cells = splits.size() * models.size();
  std::vector<json> entries(n_cells);
  std::vector<std::string> errors(n_cells);

  const fs::path dir = cfg.output / "models";
  fs::create_directories(dir);
  parallel_for(n_cells, cfg.sweep.jobs, [&](std::size_t c) {
    const std::size_t s = c / models.size();
    const auto& params = models[c % models.size()];
    try {
      const TrainedModel raw = train_model(splits[s].train, params);
      const double theta = calibrated_threshold(raw, splits[s], cfg.sweep);
      const TrainedModel model = raw.with_offset(theta);
      const fs::path path = dir / model_file_name(params, s);
      save_model(model, path);
      entries[c] = {{"model", params.descriptor()},
                    {"split", s},
                    {"path", path.string()},
                    {"threshold", theta},
                    {"train_accuracy", accuracy(model, splits[s].train)},
                    {"test_accuracy", accuracy(model, splits[s].test)}};
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  });

  json manifest = {{"models", json::array()}, {"failures", json::array()}};
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (errors[c].empty()) {
      manifest["models"].push_back(entries[c]);
    } else {
      manifest["failures"].push_back(
          {{"model", models[c % models.size()].descriptor()}, {"split", c / models.size()}, {"error", errors[c]}});
      std::cerr << "training failed: " << models[c % models.size()].descriptor() << " split " << c / models.size()
                << ": " << errors[c] << '\n';
    }
  }
  write_json(cfg.output / "train_manifest.json", manifest);
  echo_config(cfg);
  std::cout << "trained " << manifest["models"].size() << " of " << n_cells << " models into " << dir.string()
            << '\n';
  return manifest["failures"].empty() ? kExitOk : kExitPartial;
}

struct AttackArgs {
  std::string model_path;
  std::size_t sample = 0;
  std::size_t split = 0;
  std::optional<double> lambda;
  std::optional<double> d_max;
  std::string trace_path;
  bool allow_misclassified = false;
};

int cmd_attack(const Common& common, const AttackArgs& args) {
  const ExperimentConfig cfg = load(common);
  if (args.split >= cfg.split.n_splits)
    throw ConfigError("--split " + std::to_string(args.split) + " out of range (n_splits = " +
                      std::to_string(cfg.split.n_splits) + ")");
  const auto splits = make_splits(cfg);
  const SplitData& split = splits[args.split];
  const TrainedModel target = load_model(args.model_path);
  if (target.dim() != split.test.dim()) throw DimensionError(split.test.dim(), target.dim());
  if (args.sample >= split.test.size())
    throw std::out_of_range("sample index " + std::to_string(args.sample) + " out of range (test set has " +
                            std::to_string(split.test.size()) + " samples)");
  const Sample& s = split.test[args.sample];
  if (s.y != Label::Malicious) throw std::invalid_argument("sample " + std::to_string(args.sample) + " is not malicious");
  const bool misclassified = target.predict(s.x) == Label::Legitimate;
  if (misclassified && !args.allow_misclassified)
    throw std::invalid_argument("sample " + std::to_string(args.sample) +
                                " is already classified legitimate (use --allow-misclassified)");

  AttackSpec spec = cfg.sweep.attack;
  spec.bounds = make_bounds(cfg, target.dim());
  spec.d_max = args.d_max.value_or(cfg.sweep.d_max_grid.back());
  spec.lambda = args.lambda.value_or(cfg.sweep.lambdas.front());
  if (spec.lambda > 0.0) {
    std::vector<Vector> refs;
    for (const auto& t : split.train.samples())
      if (target.predict(t.x) == Label::Legitimate) refs.push_back(t.x);
    if (refs.empty()) throw std::runtime_error("no legitimate reference points for the mimicry term");
    spec.mimicry = std::make_shared<const MimicryEstimator>(std::move(refs), cfg.sweep.kde);
  }
  spec.validate(target.dim());

  AttackTrace trace = evade(target, spec, s.x);
  judge_trace(trace, target);

  const fs::path path = args.trace_path.empty()
                            ? cfg.output / ("trace_split" + std::to_string(args.split) + "_sample" +
                                            std::to_string(args.sample) + ".txt")
                            : fs::path(args.trace_path);
  std::ostringstream lambda_s, dmax_s;
  lambda_s << spec.lambda;
  dmax_s << spec.d_max;
  write_trace(trace,
              {{"model", args.model_path},
               {"split", std::to_string(args.split)},
               {"sample", std::to_string(args.sample)},
               {"lambda", lambda_s.str()},
               {"d_max", dmax_s.str()},
               {"mode", to_string(spec.mode)},
               {"termination", to_string(trace.termination)},
               {"evaded", trace.evaded ? "1" : "0"}},
              path);
  echo_config(cfg);
  std::printf("iterations=%zu evaded=%s final_g=%.6g threshold=%.6g termination=%s trace=%s\n", trace.iterations,
              trace.evaded ? "yes" : "no", trace.g_target.back(), trace.target_offset,
              to_string(trace.termination).c_str(), path.string().c_str());
  return kExitOk;
}

int cmd_sweep(const Common& common) {
  ExperimentConfig cfg = load(common);
  const auto splits = make_splits(cfg);
  cfg.sweep.attack.bounds = make_bounds(cfg, splits.front().train.dim());
  const SweepResult result = sweep(splits, cfg.sweep);

  const fs::path out = cfg.output;
  fs::create_directories(out / "curves");
  write_results_csv(result, out / "results.csv");
  write_aggregate_csv(result, out / "aggregate.csv");
  write_cells_csv(result, out / "cells.csv");
  json manifest = {{"results", "results.csv"},
                   {"aggregate", "aggregate.csv"},
                   {"cells", "cells.csv"},
                   {"config", "config.resolved.json"},
                   {"curves", json::array()}};
  for (const auto& c : result.curves) {
    const fs::path rel = fs::path("curves") / (curve_stem(c) + ".dat");
    write_plot_data(c, out / rel);
    manifest["curves"].push_back({{"model", c.classifier},
                                  {"scenario", to_string(c.scenario)},
                                  {"lambda", c.lambda},
                                  {"path", rel.string()},
                                  {"monotone", c.monotone()}});
  }
  echo_config(cfg);

  const std::size_t n_cells = splits.size() * cfg.sweep.models.size();
  if (!result.failures.empty()) {
    json failures = json::array();
    for (const auto& f : result.failures) {
      failures.push_back({{"model", f.classifier}, {"split", f.split}, {"error", f.message}});
      std::cerr << "cell failed: " << f.classifier << " split " << f.split << ": " << f.message << '\n';
    }
    write_json(out / "failures.json", failures);
    manifest["failures"] = "failures.json";
  }
  write_json(out / "manifest.json", manifest);

  for (const auto& c : result.curves) {
    std::printf("%-28s %s lambda=%-5g", c.classifier.c_str(), to_string(c.scenario).c_str(), c.lambda);
    for (const auto& p : c.points) std::printf(" %.3f", p.mean_fn);
    std::printf("\n");
  }
  std::printf("%zu of %zu cells completed; outputs in %s\n", n_cells - result.failures.size(), n_cells,
              out.string().c_str());
  if (result.failures.size() == n_cells) return kExitError;
  return result.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_export_digits(const std::string& trace_path, const std::string& out_dir) {
  const TraceFile tf = read_trace(trace_path);
  const std::size_t side = square_side(tf.x0.size());
  const fs::path dir = out_dir;
  write_pgm(dir / "x0.pgm", tf.x0, side, side);
  if (tf.first_evading_index) {
    write_pgm(dir / "first_evading.pgm", tf.first_evading, side, side);
  } else {
    std::cout << "notice: the trace never evades; first_evading.pgm not written\n";
  }
  write_pgm(dir / "final.pgm", tf.final_point, side, side);
  std::cout << "wrote " << (tf.first_evading_index ? 3 : 2) << " images to " << dir.string() << '\n';
  return kExitOk;
}

void add_common(CLI::App* cmd, Common& c, bool with_jobs = true) {
  cmd->add_option("-c,--config", c.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "override a config key, e.g. --set attack.lambda=[0]");
  cmd->add_option("-o,--out", c.out, "output directory (overrides the config)");
  if (with_jobs) cmd->add_option("-j,--jobs", c.jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-based evasion attacks against trained classifiers"};
  app.require_subcommand(1);

  Common common;
  auto* train = app.add_subcommand("train", "train every model of the grid on every split");
  add_common(train, common);

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "attack one malicious test sample and write its trace");
  add_common(attack, common, false);
  attack->add_option("-m,--model", attack_args.model_path, "model JSON written by train")
      ->required()
      ->check(CLI::ExistingFile);
  attack->add_option("-s,--sample", attack_args.sample, "index into the split's test set")->required();
  attack->add_option("--split", attack_args.split, "split index");
  attack->add_option("--lambda", attack_args.lambda, "mimicry weight (default: first configured value)");
  attack->add_option("--d-max", attack_args.d_max, "budget (default: largest configured value)");
  attack->add_option("--trace", attack_args.trace_path, "trace file path");
  attack->add_flag("--allow-misclassified", attack_args.allow_misclassified,
                   "attack samples the model already labels legitimate");

  auto* sweep_cmd = app.add_subcommand("sweep", "security-evaluation sweep over models, scenarios and budgets");
  add_common(sweep_cmd, common);

  std::string trace_path, image_dir;
  auto* export_cmd = app.add_subcommand("export-digits", "write x0 / first evading / final points as PGM images");
  export_cmd->add_option("-t,--trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("-o,--out", image_dir, "image directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(common);
    if (*attack) return cmd_attack(common, attack_args);
    if (*sweep_cmd) return cmd_sweep(common);
    if (*export_cmd) return cmd_export_digits(trace_path, image_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
