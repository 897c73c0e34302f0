#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "handpose/autodiff/linear.hpp"
#include "handpose/autodiff/spectral_norm.hpp"
#include "handpose/graphnet/graph.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

/// 20 x 3 bone matrix of one pose (incidence · P).
ad::Tensor kcs_bone_matrix(const Pose3D& pose, const SkeletonGraph& graph = hand_graph());
/// Batched form on stacked poses, [B*21 x 3] -> [B*20 x 3]; differentiable.
ad::Tensor kcs_bone_matrix(ad::Tape& tape, const ad::Tensor& poses, const SkeletonGraph& graph = hand_graph());

inline constexpr int kSpectralWarmupIterations = 50;

/// Dense layer whose weight is divided by its running spectral-norm estimate.
struct SnLinear {
  ad::Linear linear;
  ad::SpectralNormState spectral;

  static SnLinear init(std::size_t in, std::size_t out, Rng& rng);
  /// W / sigma; `update` advances the power iteration first.
  ad::Tensor effective_weight(ad::Tape& tape, bool update);
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x, bool update);
};

/// Poses and bones enter the critic in decimeters.
inline constexpr double kCriticInputScale = 0.01;

struct CriticOptions {
  std::size_t image_hidden = 128;
  std::size_t image_features = 64;
  std::size_t pose_hidden = 32;
  std::size_t pose_features = 32;
  std::size_t bone_features = 32;
  std::size_t head_hidden = 64;
  /// Feed the flattened 20 x 20 Gram matrix B·Bᵀ to the bone branch instead
  /// of the raw bone vectors.
  bool bone_gram = false;
};

/// Wasserstein critic: higher scores mean "more real". Scores are unbounded.
class Critic {
 public:
  using LayerVisitor = std::function<void(const std::string& name, SnLinear& layer)>;

  virtual ~Critic() = default;

  /// images: [B x 1024] renderings; poses: [B*21 x 3] mm. Returns [B x 1].
  /// With `update` set, every layer advances its power iteration once.
  virtual ad::Tensor score(ad::Tape& tape, const ad::Tensor& images, const ad::Tensor& poses, bool update) = 0;

  /// Visits every layer in a fixed order with a stable name.
  virtual void for_each_layer(const LayerVisitor& visit) = 0;

  void collect(ad::NamedParams& out, const std::string& prefix);
  /// Largest singular value of each effective weight, measured by a
  /// converged power iteration independent of the running estimates.
  std::vector<std::pair<std::string, double>> effective_sigmas();
  std::size_t parameter_count();
};

/// Separate branches per input source, concatenated into a decision head.
class MultiSourceCritic final : public Critic {
 public:
  MultiSourceCritic(const CriticOptions& options, Rng& rng, const SkeletonGraph& graph = hand_graph());

  ad::Tensor score(ad::Tape& tape, const ad::Tensor& images, const ad::Tensor& poses, bool update) override;
  void for_each_layer(const LayerVisitor& visit) override;

  const CriticOptions& options() const { return options_; }

 private:
  CriticOptions options_;
  const SkeletonGraph* graph_;
  ad::Tensor node_mean_;  // [1 x 21] of 1/21
  SnLinear image1_, image2_;
  SnLinear pose1_, pose2_;
  SnLinear bone_;
  SnLinear head1_, head2_;
};

/// Pose-only critic: a two-layer perceptron over the flattened pose.
class SingleSourceCritic final : public Critic {
 public:
  SingleSourceCritic(std::size_t hidden, Rng& rng);

  ad::Tensor score(ad::Tape& tape, const ad::Tensor& images, const ad::Tensor& poses, bool update) override;
  void for_each_layer(const LayerVisitor& visit) override;

 private:
  SnLinear hidden_, output_;
};

/// mean(fake) - mean(real). Throws std::invalid_argument on an empty batch.
ad::Tensor critic_loss(ad::Tape& tape, const ad::Tensor& real_scores, const ad::Tensor& fake_scores);
double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores);

/// -mean(fake). Throws std::invalid_argument on an empty batch.
ad::Tensor generator_adversarial_loss(ad::Tape& tape, const ad::Tensor& fake_scores);
double generator_adversarial_loss(std::span<const double> fake_scores);

}  // namespace handpose
