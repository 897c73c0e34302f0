#include "handpose/pipeline/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace handpose {

std::string_view to_string(RefinementKind kind) {
  switch (kind) {
    case RefinementKind::kGcn: return "gcn";
    case RefinementKind::kFc: return "fc";
    case RefinementKind::kNone: return "none";
  }
  return "?";
}

std::string_view to_string(CriticKind kind) {
  switch (kind) {
    case CriticKind::kMulti: return "multi";
    case CriticKind::kSingle: return "single";
    case CriticKind::kNone: return "none";
  }
  return "?";
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w = weights;
  if (!use_len) w.len = 0.0;
  if (!use_dir) w.dir = 0.0;
  return w;
}

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config: cannot parse value '" + value + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config: key '" + key + "' expects true or false, got '" + value + "'");
}

RefinementKind parse_refinement(const std::string& value) {
  if (value == "gcn") return RefinementKind::kGcn;
  if (value == "fc") return RefinementKind::kFc;
  if (value == "none") return RefinementKind::kNone;
  throw ConfigError("config: refinement must be gcn, fc or none, got '" + value + "'");
}

CriticKind parse_critic(const std::string& value) {
  if (value == "multi") return CriticKind::kMulti;
  if (value == "single") return CriticKind::kSingle;
  if (value == "none") return CriticKind::kNone;
  throw ConfigError("config: critic must be multi, single or none, got '" + value + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Field integer_field(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [key, member](TrainConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

Field real_field(const char* key, double TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return format_double(c.*member); },
          [key, member](TrainConfig& c, const std::string& v) { c.*member = parse_number<double>(key, v); }};
}

Field weight_field(const char* key, double LossWeights::*member) {
  return {key, [member](const TrainConfig& c) { return format_double(c.weights.*member); },
          [key, member](TrainConfig& c, const std::string& v) { c.weights.*member = parse_number<double>(key, v); }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [key, member](TrainConfig& c, const std::string& v) { c.*member = parse_bool(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      integer_field("seed", &TrainConfig::seed),
      integer_field("train_size", &TrainConfig::train_size),
      integer_field("test_size", &TrainConfig::test_size),
      integer_field("stage1_epochs", &TrainConfig::stage1_epochs),
      integer_field("stage2_epochs", &TrainConfig::stage2_epochs),
      integer_field("stage3_epochs", &TrainConfig::stage3_epochs),
      real_field("stage1_lr", &TrainConfig::stage1_lr),
      real_field("stage2_lr", &TrainConfig::stage2_lr),
      real_field("stage3_lr", &TrainConfig::stage3_lr),
      real_field("critic_lr", &TrainConfig::critic_lr),
      integer_field("batch_size", &TrainConfig::batch_size),
      weight_field("lambda_proj", &LossWeights::proj),
      weight_field("lambda_len", &LossWeights::len),
      weight_field("lambda_dir", &LossWeights::dir),
      weight_field("lambda_wass", &LossWeights::wass),
      integer_field("encoder_hidden", &TrainConfig::encoder_hidden),
      integer_field("latent_dim", &TrainConfig::latent_dim),
      integer_field("feature_dim", &TrainConfig::feature_dim),
      integer_field("res_blocks", &TrainConfig::res_blocks),
      integer_field("hidden_dim", &TrainConfig::hidden_dim),
      bool_field("relu_between_blocks", &TrainConfig::relu_between_blocks),
      integer_field("critic_steps", &TrainConfig::critic_steps),
      bool_field("critic_gram", &TrainConfig::critic_gram),
      integer_field("single_critic_hidden", &TrainConfig::single_critic_hidden),
      {"refinement", [](const TrainConfig& c) { return std::string(to_string(c.refinement)); },
       [](TrainConfig& c, const std::string& v) { c.refinement = parse_refinement(v); }},
      {"critic", [](const TrainConfig& c) { return std::string(to_string(c.critic)); },
       [](TrainConfig& c, const std::string& v) { c.critic = parse_critic(v); }},
      bool_field("use_len", &TrainConfig::use_len),
      bool_field("use_dir", &TrainConfig::use_dir),
  };
  return kFields;
}

}  // namespace

void validate(const TrainConfig& c) {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string("config: ") + key + " must be positive");
  };
  positive(c.train_size, "train_size");
  positive(c.test_size, "test_size");
  positive(c.stage1_epochs, "stage1_epochs");
  positive(c.stage2_epochs, "stage2_epochs");
  positive(c.stage3_epochs, "stage3_epochs");
  positive(c.batch_size, "batch_size");
  positive(c.encoder_hidden, "encoder_hidden");
  positive(c.latent_dim, "latent_dim");
  positive(c.feature_dim, "feature_dim");
  positive(c.hidden_dim, "hidden_dim");
  positive(c.critic_steps, "critic_steps");
  positive(c.single_critic_hidden, "single_critic_hidden");
  for (auto [v, key] : {std::pair{c.stage1_lr, "stage1_lr"}, std::pair{c.stage2_lr, "stage2_lr"},
                        std::pair{c.stage3_lr, "stage3_lr"}}) {
    if (!(v > 0.0)) throw ConfigError(std::string("config: ") + key + " must be positive");
  }
  // A zero critic rate is allowed: it freezes the critic.
  if (!(c.critic_lr >= 0.0)) throw ConfigError("config: critic_lr must be nonnegative");
  for (double w : {c.weights.proj, c.weights.len, c.weights.dir, c.weights.wass}) {
    if (!(w >= 0.0)) throw ConfigError("config: loss weights must be nonnegative");
  }
}

TrainConfig parse_config(std::istream& in) {
  TrainConfig config;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " is not of the form key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto& all = fields();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Field& f) { return key == f.key; });
    if (it == all.end()) throw ConfigError("config: unknown key '" + key + "' on line " + std::to_string(line_no));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError("config: duplicate key '" + key + "' on line " + std::to_string(line_no));
    }
    seen.push_back(key);
    it->set(config, value);
  }
  validate(config);
  return config;
}

TrainConfig parse_config_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

std::string AblationVariant::name() const {
  std::string s = std::string(to_string(refinement)) + "/" + std::string(to_string(critic));
  if (!use_len) s += "/nolen";
  if (!use_dir) s += "/nodir";
  return s;
}

TrainConfig AblationVariant::apply(TrainConfig base) const {
  base.refinement = refinement;
  base.critic = critic;
  base.use_len = use_len;
  base.use_dir = use_dir;
  return base;
}

AblationVariant parse_variant(std::string_view text) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : text) {
    if (ch == '/') {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  parts.push_back(trim(current));
  if (parts.size() < 2) {
    throw ConfigError("variant '" + std::string(text) + "': expected refinement/critic[/nolen][/nodir]");
  }
  AblationVariant v;
  try {
    v.refinement = parse_refinement(parts[0]);
    v.critic = parse_critic(parts[1]);
  } catch (const ConfigError& e) {
    throw ConfigError("variant '" + std::string(text) + "': " + e.what());
  }
  for (std::size_t i = 2; i < parts.size(); ++i) {
    if (parts[i] == "nolen" && v.use_len) {
      v.use_len = false;
    } else if (parts[i] == "nodir" && v.use_dir) {
      v.use_dir = false;
    } else {
      throw ConfigError("variant '" + std::string(text) + "': unexpected flag '" + parts[i] + "'");
    }
  }
  return v;
}

std::vector<AblationVariant> parse_variants(std::string_view text) {
  std::vector<AblationVariant> out;
  std::string entry;
  bool in_comment = false;
  auto flush = [&]() {
    const std::string t = trim(entry);
    if (!t.empty()) out.push_back(parse_variant(t));
    entry.clear();
  };
  for (char ch : text) {
    if (ch == '\n') {
      in_comment = false;
      flush();
    } else if (in_comment) {
      continue;
    } else if (ch == '#') {
      in_comment = true;
    } else if (ch == ',') {
      flush();
    } else {
      entry += ch;
    }
  }
  flush();
  if (out.empty()) throw ConfigError("no ablation variants given");
  return out;
}

}  // namespace handpose
