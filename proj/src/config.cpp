#include "evasion/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "evasion/rng.hpp"

namespace evasion {

using nlohmann::json;

namespace {

// Typed, schema-checked view of one JSON object. Every key read is recorded so
// finish() can reject the rest as unknown.
class Section {
 public:
  Section(json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {
    if (j_.is_null()) j_ = json::object();
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  bool present(const std::string& key) const { return j_.contains(key); }
  void mark(const std::string& key) { seen_.insert(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  double number(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number()) throw ConfigError(where(key) + " must be a number");
    return j_.at(key).get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(where(key) + " must be a nonnegative integer");
    return v.get<std::size_t>();
  }

  // A number or a non-empty list of numbers.
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array() || v.empty()) throw ConfigError(where(key) + " must be a number or a non-empty list");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : json::object(), where(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key " + where(k));
  }

 private:
  json j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto checked(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::vector<ModelParams> parse_model_entry(Section s) {
  const auto kind = s.get<std::string>("kind", "");
  std::vector<ModelParams> out;
  const double tol = s.number("tolerance", 1e-3);
  require(tol > 0.0, s.where("tolerance") + " must be positive");
  const auto Cs = s.numbers("C", {1.0});
  for (double C : Cs) require(C > 0.0, s.where("C") + " values must be positive");

  if (kind == "linear_svm") {
    for (double C : Cs) {
      ModelParams p;
      p.kind = ModelKind::LinearSvm;
      p.C = C;
      p.svm_tolerance = tol;
      out.push_back(p);
    }
  } else if (kind == "rbf_svm") {
    const auto gammas = s.numbers("gamma", {1.0});
    for (double C : Cs)
      for (double g : gammas) {
        require(g > 0.0, s.where("gamma") + " values must be positive");
        ModelParams p;
        p.kind = ModelKind::KernelSvm;
        p.C = C;
        p.kernel = KernelSpec::rbf(g);
        p.svm_tolerance = tol;
        out.push_back(p);
      }
  } else if (kind == "poly_svm") {
    const auto degrees = s.numbers("degree", {2.0});
    const auto coefs = s.numbers("coef0", {1.0});
    for (double C : Cs)
      for (double deg : degrees)
        for (double c0 : coefs) {
          require(deg >= 1.0 && deg == std::floor(deg), s.where("degree") + " values must be integers >= 1");
          ModelParams p;
          p.kind = ModelKind::KernelSvm;
          p.C = C;
          p.kernel = KernelSpec::polynomial(static_cast<int>(deg), c0);
          p.svm_tolerance = tol;
          out.push_back(p);
        }
  } else if (kind == "mlp") {
    const auto hidden = s.numbers("hidden", {5.0});
    MlpTrainOptions base;
    base.epochs = s.count("epochs", base.epochs);
    base.learning_rate = s.number("learning_rate", base.learning_rate);
    base.seed = s.count("seed", base.seed);
    require(base.learning_rate > 0.0, s.where("learning_rate") + " must be positive");
    for (double m : hidden) {
      require(m >= 1.0 && m == std::floor(m), s.where("hidden") + " values must be integers >= 1");
      ModelParams p;
      p.kind = ModelKind::Mlp;
      p.mlp = base;
      p.mlp.hidden = static_cast<std::size_t>(m);
      out.push_back(p);
    }
  } else {
    throw ConfigError(s.where("kind") + " must be one of linear_svm, rbf_svm, poly_svm, mlp (got '" + kind + "')");
  }
  s.finish();
  return out;
}

json model_to_config(const ModelParams& p) {
  json j;
  switch (p.kind) {
    case ModelKind::LinearSvm:
      j = {{"kind", "linear_svm"}, {"C", p.C}, {"tolerance", p.svm_tolerance}};
      break;
    case ModelKind::KernelSvm:
      if (p.kernel.kind == KernelKind::Rbf)
        j = {{"kind", "rbf_svm"}, {"C", p.C}, {"gamma", p.kernel.gamma}, {"tolerance", p.svm_tolerance}};
      else
        j = {{"kind", "poly_svm"}, {"C", p.C}, {"degree", p.kernel.degree}, {"coef0", p.kernel.coef0},
             {"tolerance", p.svm_tolerance}};
      break;
    case ModelKind::Mlp:
      j = {{"kind", "mlp"},
           {"hidden", p.mlp.hidden},
           {"epochs", p.mlp.epochs},
           {"learning_rate", p.mlp.learning_rate},
           {"seed", p.mlp.seed}};
      break;
  }
  return j;
}

Vector parse_bound(Section& s, const std::string& key, double fallback) {
  const double open = key == "upper" ? INFINITY : -INFINITY;
  if (!s.present(key)) {
    s.mark(key);
    return {fallback};
  }
  const json& v = s.raw(key);
  if (v.is_null()) return {open};
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw ConfigError(s.where(key) + " must be a number, a list or null");
  Vector out;
  for (const auto& e : v) {
    if (e.is_null()) out.push_back(open);
    else if (e.is_number()) out.push_back(e.get<double>());
    else throw ConfigError(s.where(key) + " must contain only numbers or null");
  }
  return out;
}

json bound_to_json(const Vector& v) {
  auto one = [](double x) { return std::isinf(x) ? json(nullptr) : json(x); };
  if (v.size() == 1) return one(v[0]);
  json arr = json::array();
  for (double x : v) arr.push_back(one(x));
  return arr;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("override key '" + key + "': '" + part + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("override key '" + key + "': index " + part + " out of range");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override key '" + key + "': '" + part + "' is not inside an object");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = std::move(value);
      return;
    }
    node = next;
    start = dot + 1;
  }
}

ExperimentConfig parse_config(const json& root, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  Section top(root, "");

  {
    Section d = top.sub("dataset");
    auto& ds = cfg.dataset;
    ds.format = d.get<std::string>("format", ds.format);
    ds.path = d.get<std::string>("path", "");
    ds.labels_path = d.get<std::string>("labels_path", "");
    ds.test_path = d.get<std::string>("test_path", "");
    ds.test_labels_path = d.get<std::string>("test_labels_path", "");
    ds.label_column = d.get<std::string>("label_column", ds.label_column);
    ds.dim = d.count("dim", 0);
    ds.feature_cap = d.number("feature_cap", 0.0);
    require(ds.feature_cap >= 0.0, d.where("feature_cap") + " must be nonnegative");
    const auto classes = d.numbers("classes", {static_cast<double>(ds.class_neg), static_cast<double>(ds.class_pos)});
    require(classes.size() == 2, d.where("classes") + " must list [negative, positive] digits");
    ds.class_neg = static_cast<int>(classes[0]);
    ds.class_pos = static_cast<int>(classes[1]);

    Section syn = d.sub("synthetic");
    auto& so = ds.synthetic;
    so.n_legit = syn.count("n_legit", so.n_legit);
    so.n_malicious = syn.count("n_malicious", so.n_malicious);
    so.dim = syn.count("dim", so.dim);
    so.seed = syn.count("seed", so.seed);
    so.count_scale = syn.number("count_scale", so.count_scale);
    so.obfuscated_fraction = syn.number("obfuscated_fraction", so.obfuscated_fraction);
    so.n_markers = syn.count("n_markers", so.n_markers);
    so.marker_malicious_presence = syn.number("marker_malicious_presence", so.marker_malicious_presence);
    so.active_malicious_presence = syn.number("active_malicious_presence", so.active_malicious_presence);
    syn.finish();
    d.finish();

    if (ds.format == "synthetic") {
      require(ds.path.empty(), d.where("path") + " is not used by the synthetic format");
    } else if (ds.format == "csv" || ds.format == "sparse") {
      require(!ds.path.empty(), d.where("path") + " is required for format " + ds.format);
    } else if (ds.format == "idx") {
      require(!ds.path.empty() && !ds.labels_path.empty(),
              d.where("path") + " and " + d.where("labels_path") + " are required for format idx");
      require(ds.test_path.empty() == ds.test_labels_path.empty(),
              d.where("test_path") + " and " + d.where("test_labels_path") + " go together");
    } else {
      throw ConfigError(d.where("format") + " must be one of synthetic, csv, sparse, idx (got '" + ds.format + "')");
    }
  }

  {
    Section s = top.sub("split");
    cfg.split.n_train = s.count("n_train", cfg.split.n_train);
    cfg.split.n_test = s.count("n_test", cfg.split.n_test);
    cfg.split.n_splits = s.count("n_splits", cfg.split.n_splits);
    cfg.split.seed = s.count("seed", cfg.split.seed);
    s.finish();
    require(cfg.split.n_splits >= 1, s.where("n_splits") + " must be at least 1");
    require(cfg.split.n_train >= 2, s.where("n_train") + " must be at least 2");
    require(cfg.split.n_test >= 1, s.where("n_test") + " must be at least 1");
  }

  auto& sw = cfg.sweep;
  {
    top.mark("models");
    if (!top.has("models")) throw ConfigError("models must list at least one model");
    const json& models = top.raw("models");
    require(models.is_array() && !models.empty(), "models must be a non-empty list");
    for (std::size_t i = 0; i < models.size(); ++i) {
      auto cells = parse_model_entry(Section(models[i], "models." + std::to_string(i)));
      sw.models.insert(sw.models.end(), cells.begin(), cells.end());
    }
  }

  {
    Section s = top.sub("scenario");
    std::vector<std::string> kinds = s.get<std::vector<std::string>>("kinds", {"PK"});
    require(!kinds.empty(), s.where("kinds") + " must not be empty");
    ScenarioSpec base;
    base.n_surrogate = s.count("n_surrogate", base.n_surrogate);
    base.repeats = s.count("repeats", base.repeats);
    base.relabel_with_target = s.get<bool>("relabel_with_target", base.relabel_with_target);
    base.seed = s.count("seed", base.seed);
    for (const auto& k : kinds) {
      ScenarioSpec spec = base;
      spec.kind = checked(s.where("kinds"), [&] { return knowledge_from_string(k); });
      checked(s.where("kinds"), [&] { spec.validate(); return 0; });
      sw.scenarios.push_back(spec);
    }
    Section sur = s.sub("surrogate");
    if (sur.has("C")) {
      sw.surrogate.C = sur.number("C", 100.0);
      require(*sw.surrogate.C > 0.0, sur.where("C") + " must be positive");
    } else {
      sur.mark("C");
    }
    if (sur.has("gamma")) {
      const json& g = sur.raw("gamma");
      if (g.is_string() && g.get<std::string>() == "target") {
        sw.surrogate.gamma_from_target = true;
      } else if (g.is_number() && g.get<double>() > 0.0) {
        sw.surrogate.gamma = g.get<double>();
      } else {
        throw ConfigError(sur.where("gamma") + " must be a positive number or \"target\"");
      }
    } else {
      sur.mark("gamma");
    }
    sur.finish();
    s.finish();
  }

  {
    Section a = top.sub("attack");
    auto& at = sw.attack;
    at.distance = checked(a.where("distance"), [&] { return distance_kind_from_string(a.get<std::string>("distance", "l1")); });
    at.mode = checked(a.where("mode"), [&] { return attack_mode_from_string(a.get<std::string>("mode", "continuous")); });
    at.step_norm = checked(a.where("step_norm"), [&] { return step_norm_from_string(a.get<std::string>("step_norm", "l2")); });
    at.step_size = a.number("step_size", at.step_size);
    at.epsilon = a.number("epsilon", at.epsilon);
    at.max_iters = a.count("max_iters", at.max_iters);
    require(at.step_size > 0.0, a.where("step_size") + " must be positive");
    require(at.epsilon > 0.0, a.where("epsilon") + " must be positive");
    require(at.max_iters > 0, a.where("max_iters") + " must be positive");
    sw.d_max_grid = a.numbers("d_max_grid", {});
    require(!sw.d_max_grid.empty(), a.where("d_max_grid") + " must not be empty");
    sw.lambdas = a.numbers("lambda", {0.0});
    for (double l : sw.lambdas) require(l >= 0.0, a.where("lambda") + " values must be nonnegative");

    Section b = a.sub("bounds");
    cfg.bounds.lower = parse_bound(b, "lower", 0.0);
    cfg.bounds.upper = parse_bound(b, "upper", INFINITY);
    cfg.bounds.increment_only = b.get<bool>("increment_only", false);
    b.finish();
    const std::size_t nl = cfg.bounds.lower.size(), nu = cfg.bounds.upper.size();
    if (nl == 1 && nu == 1) require(cfg.bounds.lower[0] <= cfg.bounds.upper[0], b.where("lower") + " exceeds upper");

    Section k = a.sub("kde");
    sw.kde.kernel = checked(k.where("kernel"), [&] { return kde_kernel_from_string(k.get<std::string>("kernel", "laplacian")); });
    sw.kde.bandwidth = k.number("bandwidth", sw.kde.bandwidth);
    sw.kde.truncation_k = k.count("truncation", sw.kde.truncation_k);
    sw.kde.grad_form = checked(k.where("grad"), [&] { return kde_grad_form_from_string(k.get<std::string>("grad", "corrected")); });
    require(sw.kde.bandwidth > 0.0, k.where("bandwidth") + " must be positive");
    require(sw.kde.truncation_k > 0, k.where("truncation") + " must be positive");
    k.finish();
    a.finish();
  }

  {
    Section e = top.sub("evaluation");
    sw.fp_target = e.number("fp_target", sw.fp_target);
    require(sw.fp_target >= 0.0 && sw.fp_target < 1.0, e.where("fp_target") + " must lie in [0, 1)");
    sw.calibration = checked(e.where("calibration"), [&] { return calibration_set_from_string(e.get<std::string>("calibration", "test")); });
    e.finish();
  }

  cfg.output = top.get<std::string>("output", cfg.output.string());
  sw.jobs = top.count("jobs", 0);
  top.finish();

  checked("sweep", [&] { sw.validate(); return 0; });
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& ds = cfg.dataset;
  const auto& so = ds.synthetic;
  const auto& sw = cfg.sweep;
  json j;
  j["dataset"] = {{"format", ds.format},
                  {"path", ds.path.string()},
                  {"labels_path", ds.labels_path.string()},
                  {"test_path", ds.test_path.string()},
                  {"test_labels_path", ds.test_labels_path.string()},
                  {"label_column", ds.label_column},
                  {"dim", ds.dim},
                  {"classes", {ds.class_neg, ds.class_pos}},
                  {"feature_cap", ds.feature_cap},
                  {"synthetic",
                   {{"n_legit", so.n_legit},
                    {"n_malicious", so.n_malicious},
                    {"dim", so.dim},
                    {"seed", so.seed},
                    {"count_scale", so.count_scale},
                    {"obfuscated_fraction", so.obfuscated_fraction},
                    {"n_markers", so.n_markers},
                    {"marker_malicious_presence", so.marker_malicious_presence},
                    {"active_malicious_presence", so.active_malicious_presence}}}};
  j["split"] = {{"n_train", cfg.split.n_train},
                {"n_test", cfg.split.n_test},
                {"n_splits", cfg.split.n_splits},
                {"seed", cfg.split.seed}};
  j["models"] = json::array();
  for (const auto& m : sw.models) j["models"].push_back(model_to_config(m));

  json kinds = json::array();
  for (const auto& s : sw.scenarios) kinds.push_back(to_string(s.kind));
  const ScenarioSpec base = sw.scenarios.empty() ? ScenarioSpec{} : sw.scenarios.front();
  json surrogate = {{"C", sw.surrogate.C ? json(*sw.surrogate.C) : json(nullptr)}};
  surrogate["gamma"] = sw.surrogate.gamma_from_target ? json("target")
                       : sw.surrogate.gamma           ? json(*sw.surrogate.gamma)
                                                      : json(nullptr);
  j["scenario"] = {{"kinds", kinds},
                   {"n_surrogate", base.n_surrogate},
                   {"repeats", base.repeats},
                   {"relabel_with_target", base.relabel_with_target},
                   {"seed", base.seed},
                   {"surrogate", surrogate}};
  const auto& at = sw.attack;
  j["attack"] = {{"distance", to_string(at.distance)},
                 {"mode", to_string(at.mode)},
                 {"step_norm", to_string(at.step_norm)},
                 {"step_size", at.step_size},
                 {"epsilon", at.epsilon},
                 {"max_iters", at.max_iters},
                 {"d_max_grid", sw.d_max_grid},
                 {"lambda", sw.lambdas},
                 {"bounds",
                  {{"lower", bound_to_json(cfg.bounds.lower)},
                   {"upper", bound_to_json(cfg.bounds.upper)},
                   {"increment_only", cfg.bounds.increment_only}}},
                 {"kde",
                  {{"kernel", to_string(sw.kde.kernel)},
                   {"bandwidth", sw.kde.bandwidth},
                   {"truncation", sw.kde.truncation_k},
                   {"grad", to_string(sw.kde.grad_form)}}}};
  j["evaluation"] = {{"fp_target", sw.fp_target}, {"calibration", to_string(sw.calibration)}};
  j["output"] = cfg.output.string();
  j["jobs"] = sw.jobs;
  return j;
}

std::filesystem::path resolve_path(const ExperimentConfig& cfg, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || cfg.base_dir.empty()) return p;
  return cfg.base_dir / p;
}

void check_files(const ExperimentConfig& cfg) {
  const auto& ds = cfg.dataset;
  for (const auto& [key, p] : {std::pair{"dataset.path", ds.path}, std::pair{"dataset.labels_path", ds.labels_path},
                               std::pair{"dataset.test_path", ds.test_path},
                               std::pair{"dataset.test_labels_path", ds.test_labels_path}}) {
    if (p.empty()) continue;
    const auto full = resolve_path(cfg, p);
    if (!std::filesystem::exists(full)) throw ConfigError(std::string(key) + ": file not found: " + full.string());
  }
}

FeatureBounds make_bounds(const ExperimentConfig& cfg, std::size_t dim) {
  auto expand = [dim](const Vector& v, const char* what) {
    if (v.size() == 1) return Vector(dim, v[0]);
    if (v.size() != dim)
      throw ConfigError(std::string("attack.bounds.") + what + " lists " + std::to_string(v.size()) +
                        " values for " + std::to_string(dim) + " features");
    return v;
  };
  FeatureBounds b{expand(cfg.bounds.lower, "lower"), expand(cfg.bounds.upper, "upper"), cfg.bounds.increment_only};
  checked("attack.bounds", [&] { b.validate(); return 0; });
  return b;
}

namespace {

Dataset load_one(const ExperimentConfig& cfg, const std::filesystem::path& path,
                 const std::filesystem::path& labels) {
  const auto& ds = cfg.dataset;
  if (ds.format == "csv") return load_dense_csv(resolve_path(cfg, path), ds.label_column);
  if (ds.format == "sparse") return load_sparse(resolve_path(cfg, path), ds.dim);
  if (ds.format == "idx")
    return load_idx_images(resolve_path(cfg, path), resolve_path(cfg, labels), ds.class_neg, ds.class_pos);
  return make_synthetic_pdf(ds.synthetic);
}

Dataset maybe_cap(const ExperimentConfig& cfg, Dataset d) {
  return cfg.dataset.feature_cap > 0.0 ? cap_features(d, cfg.dataset.feature_cap) : d;
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& cfg) {
  return maybe_cap(cfg, load_one(cfg, cfg.dataset.path, cfg.dataset.labels_path));
}

std::vector<SplitData> make_splits(const ExperimentConfig& cfg) {
  const Dataset data = load_dataset(cfg);
  std::optional<Dataset> pool;
  if (!cfg.dataset.test_path.empty())
    pool = maybe_cap(cfg, load_one(cfg, cfg.dataset.test_path, cfg.dataset.test_labels_path));
  if (pool && pool->dim() != data.dim())
    throw DataError("test pool has " + std::to_string(pool->dim()) + " features, training data " +
                    std::to_string(data.dim()));

  std::vector<SplitData> splits;
  for (std::size_t i = 0; i < cfg.split.n_splits; ++i) {
    const std::uint64_t seed = Rng::derive(cfg.split.seed, i);
    if (pool) {
      auto train = split_train_test(data, cfg.split.n_train, 0, seed).first;
      auto test = split_train_test(*pool, cfg.split.n_test, 0, Rng::derive(seed, 1)).first;
      splits.push_back({std::move(train), std::move(test)});
    } else {
      auto [train, test] = split_train_test(data, cfg.split.n_train, cfg.split.n_test, seed);
      splits.push_back({std::move(train), std::move(test)});
    }
  }
  return splits;
}

}  // namespace evasion
