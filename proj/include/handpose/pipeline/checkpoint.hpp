#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "handpose/autodiff/adam.hpp"
#include "handpose/autodiff/spectral_norm.hpp"
#include "handpose/pipeline/config.hpp"
#include "handpose/pipeline/model.hpp"

namespace handpose {

inline constexpr int kCheckpointVersion = 1;

enum class Stage { kI = 1, kII = 2, kIII = 3 };
std::string_view to_string(Stage stage);

struct ArrayRecord {
  ad::Shape shape;
  std::vector<double> values;
  bool operator==(const ArrayRecord&) const = default;
};

struct AdamRecord {
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  bool operator==(const AdamRecord&) const = default;
};

struct SpectralRecord {
  std::vector<double> left;
  std::vector<double> right;
  bool operator==(const SpectralRecord&) const = default;
};

/// Complete training state after one stage. Maps are keyed by parameter
/// name, so the serialized form has a canonical order.
struct Checkpoint {
  TrainConfig config;
  Stage stage = Stage::kI;
  /// Epochs completed by the optimizer in `generator_optimizer`: Stage I
  /// counts its own epochs, Stages II and III share one running count.
  std::size_t epoch = 0;
  std::map<std::string, ArrayRecord> parameters;
  std::map<std::string, AdamRecord> generator_optimizer;
  std::map<std::string, AdamRecord> critic_optimizer;
  std::map<std::string, SpectralRecord> spectral;

  bool operator==(const Checkpoint&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointFormatError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointMissingKeyError : public CheckpointError {
 public:
  CheckpointMissingKeyError(const std::string& key)
      : CheckpointError("checkpoint: missing key '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointFormatError for malformed JSON or wrongly typed values,
/// CheckpointVersionError for an unknown version and
/// CheckpointMissingKeyError naming the first absent key.
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copying between live objects and records.
void store_parameters(const ad::NamedParams& params, std::map<std::string, ArrayRecord>& out);
/// Overwrites every tensor in `params` from `records`; throws
/// CheckpointMissingKeyError or CheckpointFormatError on absent names or
/// shape mismatches.
void restore_parameters(const std::map<std::string, ArrayRecord>& records, const ad::NamedParams& params);
std::map<std::string, AdamRecord> store_optimizer(const ad::Adam& adam);
void restore_optimizer(const std::map<std::string, AdamRecord>& records, ad::Adam& adam);
void store_spectral(Critic& critic, std::map<std::string, SpectralRecord>& out, const std::string& prefix);
void restore_spectral(const std::map<std::string, SpectralRecord>& records, Critic& critic, const std::string& prefix);

/// Rebuilds the generator a checkpoint describes (refinement attached from
/// Stage II on) and loads its parameters.
Generator restore_generator(const Checkpoint& ckpt);

}  // namespace handpose
