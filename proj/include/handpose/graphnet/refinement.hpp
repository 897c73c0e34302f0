#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "handpose/autodiff/linear.hpp"
#include "handpose/graphnet/graph.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

/// Single graph convolution Â·X·W + b on node features of a batch of graphs
/// stacked as [B*n x d].
struct GcnLayer {
  ad::Linear linear;

  static GcnLayer init(std::size_t in, std::size_t out, Rng& rng) { return {ad::Linear::init(in, out, rng)}; }
  static GcnLayer zeros(std::size_t in, std::size_t out) { return {ad::Linear::zeros(in, out)}; }

  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& propagation) const;
  ad::Tensor forward_with(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& propagation,
                          const ad::Tensor& effective_weight) const;
  void collect(ad::NamedParams& out, const std::string& prefix) const { linear.collect(out, prefix); }
};

/// Learnable per-node layer normalization (gain 1, bias 0 at init).
struct LayerNorm {
  ad::Tensor gain;
  ad::Tensor bias;

  static LayerNorm init(std::size_t dim);
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x) const;
  void collect(ad::NamedParams& out, const std::string& prefix) const;
};

/// X -> N(g(N(g(X)))) + skip(X), every g and skip a GcnLayer.
struct GraphResBlock {
  GcnLayer first;
  LayerNorm first_norm;
  GcnLayer second;
  LayerNorm second_norm;
  GcnLayer skip;

  static GraphResBlock init(std::size_t dim, Rng& rng);
  std::size_t dim() const { return first.linear.in_features(); }
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& propagation) const;
  void collect(ad::NamedParams& out, const std::string& prefix) const;
};

/// Learned deformation of a prior pose from its coordinates and an image
/// feature: implementations return [B*21 x 3] offsets in millimeters.
class Refiner {
 public:
  virtual ~Refiner() = default;
  /// prior: [B*21 x 3] mm; feature: [B x feature_dim].
  virtual ad::Tensor deformation(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature) const = 0;
  virtual void collect(ad::NamedParams& out, const std::string& prefix) const = 0;
  std::size_t parameter_count() const;
};

/// Coordinates enter the refinement networks in decimeters so every input
/// channel is O(1); the deformation is produced in millimeters.
inline constexpr double kRefinementInputScale = 0.01;

/// Per-node network input: scaled coordinates concatenated with the image
/// feature broadcast to all 21 nodes, [B*21 x (3 + feature_dim)].
ad::Tensor refinement_input(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature);

struct GcnRefinerOptions {
  std::size_t feature_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t res_blocks = 4;
  bool relu_between_blocks = true;
};

/// Input GcnLayer, stacked GraphResBlocks and a zero-initialized output
/// GcnLayer over the hand graph.
class GcnRefiner final : public Refiner {
 public:
  GcnRefiner(const GcnRefinerOptions& options, Rng& rng, const SkeletonGraph& graph = hand_graph());

  ad::Tensor deformation(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature) const override;
  void collect(ad::NamedParams& out, const std::string& prefix) const override;

  GcnLayer& input_layer() { return input_; }
  std::vector<GraphResBlock>& blocks() { return blocks_; }
  GcnLayer& output_layer() { return output_; }

 private:
  GcnRefinerOptions options_;
  const SkeletonGraph* graph_;
  GcnLayer input_;
  std::vector<GraphResBlock> blocks_;
  GcnLayer output_;
};

/// Fully connected substitute: two-layer perceptron over the flattened
/// [21 x (3 + feature_dim)] input, zero-initialized output layer.
class FcRefiner final : public Refiner {
 public:
  FcRefiner(std::size_t feature_dim, std::size_t hidden_dim, Rng& rng);

  /// Hidden width whose parameter count is closest to `budget`.
  static std::size_t hidden_for_budget(std::size_t feature_dim, std::size_t budget);

  ad::Tensor deformation(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature) const override;
  void collect(ad::NamedParams& out, const std::string& prefix) const override;

 private:
  ad::Linear hidden_;
  ad::Linear output_;
};

/// prior + deformation.
ad::Tensor refine(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature, const Refiner& refiner);
Pose3D refine(const Pose3D& prior, std::span<const double> feature, const Refiner& refiner);

}  // namespace handpose
