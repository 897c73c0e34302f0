#pragma once

#include <memory>

#include "handpose/autodiff/linear.hpp"
#include "handpose/discriminator/critic.hpp"
#include "handpose/graphnet/refinement.hpp"
#include "handpose/handmodel/encoder.hpp"
#include "handpose/pipeline/config.hpp"

namespace handpose {

/// Image -> pose network. The hand-model part (latent encoder and parameter
/// decoder) always exists; the refinement part (feature encoder and refiner)
/// is attached from Stage II on.
class Generator {
 public:
  /// Fresh hand-model part from the "init" seed stream.
  explicit Generator(const TrainConfig& config);

  /// Attaches a fresh refinement part (output layer zero) from its own init
  /// stream. Requires config.refinement != none.
  void attach_refinement();
  bool has_refinement() const { return refiner_ != nullptr; }

  /// [B x 1024] -> prior poses [B*21 x 3] from the hand-model part alone.
  ad::Tensor prior(ad::Tape& tape, const ad::Tensor& images) const;
  /// Full forward: prior plus learned deformation when refinement is attached.
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& images) const;

  ad::NamedParams hand_model_parameters() const;
  /// All parameters, hand-model part first.
  ad::NamedParams parameters() const;

  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  Encoder latent_encoder_;
  ParamDecoder decoder_;
  Encoder feature_encoder_;
  std::unique_ptr<Refiner> refiner_;
};

/// Parameter count of the default graph refiner for this configuration.
std::size_t gcn_refiner_parameter_count(const TrainConfig& config);

/// Critic selected by config.critic, built from the "critic-init" stream.
/// Returns null for CriticKind::kNone.
std::unique_ptr<Critic> make_critic(const TrainConfig& config);

}  // namespace handpose
