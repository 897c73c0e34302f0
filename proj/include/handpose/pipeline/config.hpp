#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "handpose/losses/losses.hpp"

namespace handpose {

enum class RefinementKind { kGcn, kFc, kNone };
enum class CriticKind { kMulti, kSingle, kNone };

std::string_view to_string(RefinementKind kind);
std::string_view to_string(CriticKind kind);

/// Every tunable of a training run. The text form is `key = value` per line;
/// `#` starts a comment. Keys are listed in README.md with their defaults.
struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t train_size = 2000;
  std::size_t test_size = 500;

  std::size_t stage1_epochs = 100;
  std::size_t stage2_epochs = 100;
  std::size_t stage3_epochs = 100;
  double stage1_lr = 1e-3;
  double stage2_lr = 1e-4;
  double stage3_lr = 1e-4;
  double critic_lr = 1e-4;
  std::size_t batch_size = 32;

  LossWeights weights;

  std::size_t encoder_hidden = 128;
  std::size_t latent_dim = 32;
  std::size_t feature_dim = 64;
  std::size_t res_blocks = 4;
  std::size_t hidden_dim = 128;
  bool relu_between_blocks = true;

  /// Critic updates per generator update.
  std::size_t critic_steps = 1;
  bool critic_gram = false;
  std::size_t single_critic_hidden = 64;

  RefinementKind refinement = RefinementKind::kGcn;
  CriticKind critic = CriticKind::kMulti;
  bool use_len = true;
  bool use_dir = true;

  /// Loss weights after the per-loss enables are applied.
  LossWeights effective_weights() const;

  bool operator==(const TrainConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigError for unknown keys, unparsable values or invariant
/// violations (zero counts, non-positive learning rates, negative weights).
TrainConfig parse_config(std::istream& in);
TrainConfig parse_config_text(std::string_view text);
TrainConfig load_config(const std::string& path);
void validate(const TrainConfig& config);

/// Canonical text: every key in a fixed order, numbers in shortest
/// round-trip form. parse(format(c)) == c.
std::string format_config(const TrainConfig& config);

/// One row of an ablation study: `refinement/critic[/nolen][/nodir]`, e.g.
/// `gcn/multi`, `fc/none`, `gcn/multi/nolen/nodir`.
struct AblationVariant {
  RefinementKind refinement = RefinementKind::kGcn;
  CriticKind critic = CriticKind::kMulti;
  bool use_len = true;
  bool use_dir = true;

  std::string name() const;
  TrainConfig apply(TrainConfig base) const;
  bool operator==(const AblationVariant&) const = default;
};

AblationVariant parse_variant(std::string_view text);
/// Comma- or newline-separated variants; blank entries and `#` comments are
/// skipped. Throws ConfigError if none remain.
std::vector<AblationVariant> parse_variants(std::string_view text);

}  // namespace handpose
