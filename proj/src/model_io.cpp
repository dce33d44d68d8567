#include "gks/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gks/error.hpp"
#include "gks/jsonlib.hpp"

namespace gks {

namespace {

using ojson = nlohmann::ordered_json;

ojson parse(const std::string& text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + ": invalid JSON (" + e.what() + ")");
  }
}

template <typename T>
T field(const ojson& obj, const char* key, const char* what) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string(what) + ": missing field \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string(what) + ": field \"" + key + "\" has the wrong type");
  }
}

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ParseError(std::string(what) + ": non-finite value");
  }
}

}  // namespace

std::string provider_kind_name(ProviderKind kind) {
  return kind == ProviderKind::HashedGaussian ? "hashed-gaussian" : "file-vectors";
}

std::string detector_to_json(const DetectorModel& model) {
  ojson j{{"hash_dim", model.hash_dim},
          {"turn_buckets", model.turn_buckets},
          {"threshold", model.threshold},
          {"weights", model.weights}};
  return j.dump() + "\n";
}

DetectorModel detector_from_json(const std::string& text) {
  const auto j = parse(text, "detector model");
  if (!j.is_object()) throw ParseError("detector model: expected an object");
  DetectorModel m = DetectorModel::zeros(field<std::size_t>(j, "hash_dim", "detector model"),
                                         field<std::size_t>(j, "turn_buckets", "detector model"),
                                         field<double>(j, "threshold", "detector model"));
  m.weights = field<std::vector<double>>(j, "weights", "detector model");
  if (m.weights.size() != m.hash_dim + m.turn_buckets) {
    throw ParseError("detector model: expected " + std::to_string(m.hash_dim + m.turn_buckets) + " weights");
  }
  require_finite(m.weights, "detector model");
  return m;
}

std::string selector_to_json(const SelectorModel& model) {
  ojson provider{{"kind", provider_kind_name(model.provider.kind)}};
  if (model.provider.kind == ProviderKind::HashedGaussian) {
    provider["seed"] = model.provider.seed;
  } else {
    provider["path"] = model.provider.path;
  }
  provider["dim"] = model.provider.dim;
  ojson j{{"mus", model.kernels.mus},
          {"sigmas", model.kernels.sigmas},
          {"readout_weights", model.readout_weights},
          {"attention_flag", model.cross_node_attention},
          {"provider", std::move(provider)}};
  return j.dump() + "\n";
}

SelectorModel selector_from_json(const std::string& text) {
  const auto j = parse(text, "selector model");
  if (!j.is_object()) throw ParseError("selector model: expected an object");
  SelectorModel m;
  m.kernels.mus = field<std::vector<double>>(j, "mus", "selector model");
  m.kernels.sigmas = field<std::vector<double>>(j, "sigmas", "selector model");
  try {
    m.kernels.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("selector model: ") + e.what());
  }
  m.readout_weights = field<std::vector<double>>(j, "readout_weights", "selector model");
  if (m.readout_weights.size() != m.kernels.size()) {
    throw ParseError("selector model: readout_weights length differs from kernel count");
  }
  require_finite(m.readout_weights, "selector model");
  m.cross_node_attention = field<bool>(j, "attention_flag", "selector model");
  const auto provider = field<ojson>(j, "provider", "selector model");
  const auto kind = field<std::string>(provider, "kind", "selector model provider");
  if (kind == "hashed-gaussian") {
    m.provider.kind = ProviderKind::HashedGaussian;
    m.provider.seed = field<std::uint64_t>(provider, "seed", "selector model provider");
  } else if (kind == "file-vectors") {
    m.provider.kind = ProviderKind::FileVectors;
    m.provider.path = field<std::string>(provider, "path", "selector model provider");
  } else {
    throw ParseError("selector model: unknown provider kind \"" + kind + "\"");
  }
  m.provider.dim = field<std::size_t>(provider, "dim", "selector model provider");
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

}  // namespace gks
