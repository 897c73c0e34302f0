#pragma once

#include <optional>
#include <span>

#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"
#include "handpose/graphnet/graph.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

/// Trade-off weights of the combined objective. The joint term keeps weight 1
/// in training; it is a field only so single terms can be isolated.
struct LossWeights {
  double proj = 0.1;
  double len = 0.01;
  double dir = 0.1;
  double wass = 0.01;
  double pose = 1.0;

  bool operator==(const LossWeights&) const = default;
};

// Batched, differentiable losses. Poses are stacked [B*21 x 3] (mm); the
// ground truth is treated as a constant. Batch reduction is the mean over
// samples throughout.

/// Mean over joints and samples of the 3D Euclidean joint error.
ad::Tensor loss_pose(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt);
/// Mean over joints and samples of the 2D error; inputs are [B*21 x 2].
ad::Tensor loss_proj(ad::Tape& tape, const ad::Tensor& pred2d, const ad::Tensor& gt2d);
/// Orthographic projection of stacked poses: [B*21 x 3] -> [B*21 x 2].
ad::Tensor project_batch(ad::Tape& tape, const ad::Tensor& poses);
/// [B*21 x 3] -> [B*20 x 3]; same implementation as the KCS layer.
ad::Tensor bone_vectors(ad::Tape& tape, const ad::Tensor& poses, const SkeletonGraph& graph = hand_graph());
/// Σ over bones of | |b| - |b̂| |, averaged over samples.
ad::Tensor loss_len(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt,
                    const SkeletonGraph& graph = hand_graph());
/// Σ over bones of | b/|b| - b̂/|b̂| |, averaged over samples. Throws
/// std::domain_error if any bone of either pose has zero length.
ad::Tensor loss_dir(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt,
                    const SkeletonGraph& graph = hand_graph());

struct LossTerms {
  ad::Tensor pose;
  ad::Tensor proj;
  ad::Tensor len;   ///< undefined when its weight is zero
  ad::Tensor dir;   ///< undefined when its weight is zero
  ad::Tensor wass;  ///< undefined without critic scores or with zero weight
  ad::Tensor total;
};

/// λ_pose·L_pose + λ_proj·L_proj + λ_len·L_len + λ_dir·L_dir + λ_Wass·L_Wass, with
/// L_Wass = -mean(fake_scores). Terms with zero weight are not evaluated.
LossTerms total_loss(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt,
                     const std::optional<ad::Tensor>& fake_scores, const LossWeights& weights,
                     const SkeletonGraph& graph = hand_graph());

// Single-pose conveniences.
double loss_pose(const Pose3D& pred, const Pose3D& gt);
double loss_proj(const Pose2D& pred, const Pose2D& gt);
double loss_len(const Pose3D& pred, const Pose3D& gt);
double loss_dir(const Pose3D& pred, const Pose3D& gt);
/// Per-sample combined objective with L_Wass = -fake_score.
double total_loss(const Pose3D& pred, const Pose3D& gt, double fake_score, const LossWeights& weights);

/// Stacks poses into a [B*21 x 3] constant tensor.
ad::Tensor stack_poses(std::span<const Pose3D> poses);
/// Splits a [B*21 x 3] tensor back into poses.
std::vector<Pose3D> unstack_poses(const ad::Tensor& stacked);

}  // namespace handpose
