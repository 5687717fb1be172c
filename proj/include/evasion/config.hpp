#pragma once

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "evasion/evaluation.hpp"
#include "evasion/synthetic.hpp"
#include "json.hpp"

namespace evasion {

/// Any problem with the experiment configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetConfig {
  std::string format = "synthetic";  // synthetic | csv | sparse | idx
  std::filesystem::path path;
  std::filesystem::path labels_path;       // idx only
  std::filesystem::path test_path;         // optional separate test pool
  std::filesystem::path test_labels_path;  // idx only
  std::string label_column = "label";      // csv
  std::size_t dim = 0;                     // sparse; 0 infers the width
  int class_neg = 7;                       // idx digit mapped to -1
  int class_pos = 3;                       // idx digit mapped to +1
  double feature_cap = 0.0;                // 0 disables clipping
  SyntheticPdfOptions synthetic;
};

struct SplitConfig {
  std::size_t n_train = 500;
  std::size_t n_test = 500;
  std::size_t n_splits = 5;
  std::uint64_t seed = 1;
};

/// Scalar entries apply to every feature; null upper means unbounded.
struct BoundsConfig {
  Vector lower{0.0};
  Vector upper{std::numeric_limits<double>::infinity()};
  bool increment_only = false;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  SplitConfig split;
  BoundsConfig bounds;
  SweepSpec sweep;            // models, scenarios, attack, kde, lambdas, budgets, fp target
  std::filesystem::path output = "out";
  std::filesystem::path base_dir;  // relative dataset paths resolve against this
};

/// Reads a JSON file; parse errors carry the path.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Applies one `dotted.key=value` override. The value is parsed as JSON when
/// possible and taken as a string otherwise. Numeric segments index arrays.
void apply_override(nlohmann::json& root, const std::string& assignment);

/// Builds a validated configuration; unknown keys and bad values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& root, const std::filesystem::path& base_dir = {});

/// Fully resolved form (defaults filled, model grid expanded).
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Checks that every referenced file exists.
void check_files(const ExperimentConfig& config);

/// Per-feature bounds for a dataset of the given width.
FeatureBounds make_bounds(const ExperimentConfig& config, std::size_t dim);

std::filesystem::path resolve_path(const ExperimentConfig& config, const std::filesystem::path& p);

Dataset load_dataset(const ExperimentConfig& config);

/// Train/test pairs for every split. With a separate test pool the training
/// part is drawn from the main dataset and the test part from the pool.
std::vector<SplitData> make_splits(const ExperimentConfig& config);

}  // namespace evasion
