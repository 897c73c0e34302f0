#include "handpose/pipeline/model.hpp"

#include <stdexcept>

#include "handpose/autodiff/ops.hpp"
#include "handpose/handmodel/kinematics.hpp"

namespace handpose {
namespace {

GcnRefinerOptions gcn_options(const TrainConfig& config) {
  GcnRefinerOptions o;
  o.feature_dim = config.feature_dim;
  o.hidden_dim = config.hidden_dim;
  o.res_blocks = config.res_blocks;
  o.relu_between_blocks = config.relu_between_blocks;
  return o;
}

}  // namespace

Generator::Generator(const TrainConfig& config) : config_(config) {
  Rng rng(derive_seed(config.seed, "init", 1));
  latent_encoder_ = Encoder::init(config.latent_dim, rng, config.encoder_hidden);
  decoder_ = ParamDecoder::init(rng, config.latent_dim);
}

void Generator::attach_refinement() {
  if (config_.refinement == RefinementKind::kNone) {
    throw std::logic_error("attach_refinement: configuration has no refinement network");
  }
  // Both refiner kinds draw from the same stream, so ablation rows share the
  // feature encoder initialization.
  Rng rng(derive_seed(config_.seed, "init", 2));
  feature_encoder_ = Encoder::init(config_.feature_dim, rng, config_.encoder_hidden);
  if (config_.refinement == RefinementKind::kGcn) {
    refiner_ = std::make_unique<GcnRefiner>(gcn_options(config_), rng);
  } else {
    const std::size_t hidden = FcRefiner::hidden_for_budget(config_.feature_dim, gcn_refiner_parameter_count(config_));
    refiner_ = std::make_unique<FcRefiner>(config_.feature_dim, hidden, rng);
  }
}

ad::Tensor Generator::prior(ad::Tape& tape, const ad::Tensor& images) const {
  const ad::Tensor params = decoder_.forward(tape, latent_encoder_.forward(tape, images));
  const ad::Tensor joints = hand_model(tape, params);
  return ad::reshape(tape, joints, {images.rows() * kNumJoints, 3});
}

ad::Tensor Generator::forward(ad::Tape& tape, const ad::Tensor& images) const {
  const ad::Tensor p = prior(tape, images);
  if (!refiner_) return p;
  return refine(tape, p, feature_encoder_.forward(tape, images), *refiner_);
}

ad::NamedParams Generator::hand_model_parameters() const {
  ad::NamedParams out;
  latent_encoder_.collect(out, "generator.latent_encoder");
  decoder_.collect(out, "generator.decoder");
  return out;
}

ad::NamedParams Generator::parameters() const {
  ad::NamedParams out = hand_model_parameters();
  if (refiner_) {
    feature_encoder_.collect(out, "generator.feature_encoder");
    refiner_->collect(out, "generator.refiner");
  }
  return out;
}

std::size_t gcn_refiner_parameter_count(const TrainConfig& config) {
  Rng scratch(0);
  return GcnRefiner(gcn_options(config), scratch).parameter_count();
}

std::unique_ptr<Critic> make_critic(const TrainConfig& config) {
  Rng rng(derive_seed(config.seed, "critic-init"));
  switch (config.critic) {
    case CriticKind::kMulti: {
      CriticOptions options;
      options.bone_gram = config.critic_gram;
      return std::make_unique<MultiSourceCritic>(options, rng);
    }
    case CriticKind::kSingle:
      return std::make_unique<SingleSourceCritic>(config.single_critic_hidden, rng);
    case CriticKind::kNone:
      return nullptr;
  }
  return nullptr;
}

}  // namespace handpose
