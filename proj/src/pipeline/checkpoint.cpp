#include "handpose/pipeline/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace handpose {

using nlohmann::json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kI: return "I";
    case Stage::kII: return "II";
    case Stage::kIII: return "III";
  }
  return "?";
}

namespace {

Stage parse_stage(const std::string& s) {
  if (s == "I") return Stage::kI;
  if (s == "II") return Stage::kII;
  if (s == "III") return Stage::kIII;
  throw CheckpointFormatError("checkpoint: unknown stage tag '" + s + "'");
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw CheckpointFormatError("checkpoint: '" + path + "' is not an object");
  const auto it = j.find(key);
  if (it == j.end()) throw CheckpointMissingKeyError(path.empty() ? key : path + "." + key);
  return *it;
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw CheckpointFormatError("checkpoint: bad value at '" + path + "': " + e.what());
  }
}

json config_json(const TrainConfig& config) {
  json out = json::object();
  std::istringstream lines(format_config(config));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw CheckpointFormatError("checkpoint: 'config' is not an object");
  std::string text;
  for (const auto& [key, value] : j.items()) {
    text += key + " = " + get_as<std::string>(value, "config." + key) + "\n";
  }
  try {
    return parse_config_text(text);
  } catch (const ConfigError& e) {
    throw CheckpointFormatError(std::string("checkpoint: ") + e.what());
  }
}

json adam_json(const std::map<std::string, AdamRecord>& records) {
  json out = json::object();
  for (const auto& [name, r] : records) {
    out[name] = {{"step", r.step}, {"first_moment", r.first_moment}, {"second_moment", r.second_moment}};
  }
  return out;
}

std::map<std::string, AdamRecord> adam_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw CheckpointFormatError("checkpoint: '" + path + "' is not an object");
  std::map<std::string, AdamRecord> out;
  for (const auto& [name, value] : j.items()) {
    const std::string p = path + "." + name;
    AdamRecord r;
    r.step = get_as<std::uint64_t>(require(value, "step", p), p + ".step");
    r.first_moment = get_as<std::vector<double>>(require(value, "first_moment", p), p + ".first_moment");
    r.second_moment = get_as<std::vector<double>>(require(value, "second_moment", p), p + ".second_moment");
    out.emplace(name, std::move(r));
  }
  return out;
}

/// Names every stage-appropriate record must contain.
struct Expected {
  std::vector<std::string> parameters;
  std::vector<std::string> generator_optimizer;
  std::vector<std::string> critic;
};

Expected expected_names(const TrainConfig& config, Stage stage) {
  Expected e;
  if (stage != Stage::kI && config.refinement == RefinementKind::kNone) {
    throw CheckpointFormatError("checkpoint: stage " + std::string(to_string(stage)) +
                                " requires a refinement part but the config has refinement = none");
  }
  if (stage == Stage::kIII && config.critic == CriticKind::kNone) {
    throw CheckpointFormatError("checkpoint: stage III requires a critic but the config has critic = none");
  }
  Generator generator(config);
  if (stage != Stage::kI) generator.attach_refinement();
  for (const auto& [name, t] : generator.parameters()) {
    e.parameters.push_back(name);
    e.generator_optimizer.push_back(name);
  }
  if (stage == Stage::kIII && config.critic != CriticKind::kNone) {
    auto critic = make_critic(config);
    ad::NamedParams params;
    critic->collect(params, "critic");
    for (const auto& [name, t] : params) {
      e.parameters.push_back(name);
      e.critic.push_back(name);
    }
  }
  return e;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json doc = json::object();
  doc["version"] = kCheckpointVersion;
  doc["stage"] = std::string(to_string(ckpt.stage));
  doc["epoch"] = ckpt.epoch;
  doc["config"] = config_json(ckpt.config);
  json params = json::object();
  for (const auto& [name, r] : ckpt.parameters) params[name] = {{"shape", r.shape}, {"values", r.values}};
  doc["parameters"] = std::move(params);
  doc["generator_optimizer"] = adam_json(ckpt.generator_optimizer);
  doc["critic_optimizer"] = adam_json(ckpt.critic_optimizer);
  json spectral = json::object();
  for (const auto& [name, r] : ckpt.spectral) spectral[name] = {{"left", r.left}, {"right", r.right}};
  doc["spectral"] = std::move(spectral);
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointFormatError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CheckpointFormatError("checkpoint: top level is not an object");

  const int version = get_as<int>(require(doc, "version", ""), "version");
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.stage = parse_stage(get_as<std::string>(require(doc, "stage", ""), "stage"));
  ckpt.epoch = get_as<std::size_t>(require(doc, "epoch", ""), "epoch");
  ckpt.config = config_from_json(require(doc, "config", ""));

  const json& params = require(doc, "parameters", "");
  const Expected expected = expected_names(ckpt.config, ckpt.stage);
  for (const std::string& name : expected.parameters) {
    const json& entry = require(params, name, "parameters");
    ArrayRecord r;
    r.shape = get_as<ad::Shape>(require(entry, "shape", "parameters." + name), "parameters." + name + ".shape");
    r.values = get_as<std::vector<double>>(require(entry, "values", "parameters." + name),
                                           "parameters." + name + ".values");
    if (ad::shape_size(r.shape) != r.values.size()) {
      throw CheckpointFormatError("checkpoint: parameters." + name + " has " + std::to_string(r.values.size()) +
                                  " values for shape " + ad::shape_string(r.shape));
    }
    ckpt.parameters.emplace(name, std::move(r));
  }
  if (params.size() != expected.parameters.size()) {
    throw CheckpointFormatError("checkpoint: unexpected entries in 'parameters'");
  }

  ckpt.generator_optimizer = adam_from_json(require(doc, "generator_optimizer", ""), "generator_optimizer");
  for (const std::string& name : expected.generator_optimizer) {
    if (!ckpt.generator_optimizer.count(name)) throw CheckpointMissingKeyError("generator_optimizer." + name);
  }
  ckpt.critic_optimizer = adam_from_json(require(doc, "critic_optimizer", ""), "critic_optimizer");
  const json& spectral = require(doc, "spectral", "");
  for (const std::string& name : expected.critic) {
    if (!ckpt.critic_optimizer.count(name)) throw CheckpointMissingKeyError("critic_optimizer." + name);
  }
  if (!spectral.is_object()) throw CheckpointFormatError("checkpoint: 'spectral' is not an object");
  for (const auto& [name, value] : spectral.items()) {
    const std::string p = "spectral." + name;
    ckpt.spectral.emplace(name, SpectralRecord{get_as<std::vector<double>>(require(value, "left", p), p + ".left"),
                                               get_as<std::vector<double>>(require(value, "right", p), p + ".right")});
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot write '" + path.string() + "'");
  out << serialize_checkpoint(ckpt);
  if (!out) throw CheckpointError("checkpoint: write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

void store_parameters(const ad::NamedParams& params, std::map<std::string, ArrayRecord>& out) {
  for (const auto& [name, t] : params) out[name] = ArrayRecord{t.shape(), {t.values().begin(), t.values().end()}};
}

void restore_parameters(const std::map<std::string, ArrayRecord>& records, const ad::NamedParams& params) {
  for (const auto& [name, t] : params) {
    const auto it = records.find(name);
    if (it == records.end()) throw CheckpointMissingKeyError("parameters." + name);
    if (it->second.shape != t.shape()) {
      throw CheckpointFormatError("checkpoint: parameters." + name + " has shape " +
                                  ad::shape_string(it->second.shape) + ", model expects " +
                                  ad::shape_string(t.shape()));
    }
    ad::Tensor target = t;
    std::copy(it->second.values.begin(), it->second.values.end(), target.mutable_values().begin());
  }
}

std::map<std::string, AdamRecord> store_optimizer(const ad::Adam& adam) {
  std::map<std::string, AdamRecord> out;
  for (const auto& e : adam.entries()) {
    out[e.name] = AdamRecord{e.state.step, e.state.first_moment, e.state.second_moment};
  }
  return out;
}

void restore_optimizer(const std::map<std::string, AdamRecord>& records, ad::Adam& adam) {
  for (auto& e : adam.entries()) {
    const auto it = records.find(e.name);
    if (it == records.end()) throw CheckpointMissingKeyError("optimizer." + e.name);
    const AdamRecord& r = it->second;
    if (r.first_moment.size() != e.param.size() || r.second_moment.size() != e.param.size()) {
      throw CheckpointFormatError("checkpoint: optimizer state for " + e.name + " has the wrong size");
    }
    e.state.step = r.step;
    e.state.first_moment = r.first_moment;
    e.state.second_moment = r.second_moment;
  }
}

void store_spectral(Critic& critic, std::map<std::string, SpectralRecord>& out, const std::string& prefix) {
  critic.for_each_layer([&](const std::string& name, SnLinear& layer) {
    out[prefix + "." + name] = SpectralRecord{layer.spectral.left, layer.spectral.right};
  });
}

void restore_spectral(const std::map<std::string, SpectralRecord>& records, Critic& critic,
                      const std::string& prefix) {
  critic.for_each_layer([&](const std::string& name, SnLinear& layer) {
    const auto it = records.find(prefix + "." + name);
    if (it == records.end()) throw CheckpointMissingKeyError("spectral." + prefix + "." + name);
    if (it->second.left.size() != layer.spectral.left.size() ||
        it->second.right.size() != layer.spectral.right.size()) {
      throw CheckpointFormatError("checkpoint: spectral state for " + name + " has the wrong size");
    }
    layer.spectral.left = it->second.left;
    layer.spectral.right = it->second.right;
  });
}

Generator restore_generator(const Checkpoint& ckpt) {
  Generator generator(ckpt.config);
  if (ckpt.stage != Stage::kI) generator.attach_refinement();
  restore_parameters(ckpt.parameters, generator.parameters());
  return generator;
}

}  // namespace handpose
