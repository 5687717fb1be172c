#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evasion/models.hpp"

namespace evasion {

using nlohmann::json;

namespace {

json kernel_json(const KernelSpec& k) {
  return {{"kind", to_string(k.kind)}, {"gamma", k.gamma}, {"degree", k.degree}, {"coef0", k.coef0}};
}

KernelSpec kernel_from(const json& j) {
  KernelSpec k;
  k.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  k.gamma = j.at("gamma").get<double>();
  k.degree = j.at("degree").get<int>();
  k.coef0 = j.at("coef0").get<double>();
  return k;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = model.kind_name();
  j["decision_offset"] = model.decision_offset();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          j["w"] = m.w;
          j["b"] = m.b;
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          j["kernel"] = kernel_json(m.kernel);
          j["C"] = m.C;
          j["b"] = m.b;
          j["dual_coefs"] = m.dual_coefs;
          j["support_vectors"] = m.support_vectors;
        } else {
          j["hidden_weights"] = m.hidden_weights;
          j["hidden_biases"] = m.hidden_biases;
          j["output_weights"] = m.output_weights;
          j["output_bias"] = m.output_bias;
        }
      },
      model.model());
  // nlohmann emits the shortest representation that round-trips each double.
  return j.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("corrupted model file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version"))
    throw ModelError("corrupted model file: missing format_version");
  const auto version = j["format_version"].is_string() ? j["format_version"].get<std::string>() : "";
  if (version != kModelFormatVersion)
    throw ModelError("unsupported model format_version '" + version + "', expected '" +
                     kModelFormatVersion + "'");
  try {
    const auto kind = j.at("kind").get<std::string>();
    const double offset = j.at("decision_offset").get<double>();
    if (kind == "linear") {
      LinearModel m{j.at("w").get<Vector>(), j.at("b").get<double>()};
      return TrainedModel(std::move(m), offset);
    }
    if (kind == "svm") {
      SvmModel m;
      m.kernel = kernel_from(j.at("kernel"));
      m.C = j.at("C").get<double>();
      m.b = j.at("b").get<double>();
      m.dual_coefs = j.at("dual_coefs").get<Vector>();
      m.support_vectors = j.at("support_vectors").get<std::vector<Vector>>();
      return TrainedModel(std::move(m), offset);
    }
    if (kind == "mlp") {
      MlpModel m;
      m.hidden_weights = j.at("hidden_weights").get<std::vector<Vector>>();
      m.hidden_biases = j.at("hidden_biases").get<Vector>();
      m.output_weights = j.at("output_weights").get<Vector>();
      m.output_bias = j.at("output_bias").get<double>();
      return TrainedModel(std::move(m), offset);
    }
    throw ModelError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ModelError(std::string("corrupted model file: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace evasion
