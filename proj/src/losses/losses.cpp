#include "handpose/losses/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "handpose/autodiff/ops.hpp"
#include "handpose/handmodel/kinematics.hpp"

namespace handpose {
namespace {

void require_stacked(const ad::Tensor& t, std::size_t dims, const char* what) {
  if (t.rank() != 2 || t.cols() != dims || t.rows() == 0 || t.rows() % kNumJoints != 0) {
    throw std::invalid_argument(std::string(what) + ": expected [B*21 x " + std::to_string(dims) + "], got " +
                                ad::shape_string(t.shape()));
  }
}

void require_same(const ad::Tensor& a, const ad::Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + ad::shape_string(a.shape()) + " vs " +
                                ad::shape_string(b.shape()));
  }
}

ad::Tensor mean_row_distance(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt) {
  return ad::mean(tape, ad::l2norm_rows(tape, ad::sub(tape, pred, gt), ad::ZeroNormGrad::kSubgradient));
}

std::size_t batch_of(const ad::Tensor& stacked) { return stacked.rows() / kNumJoints; }

/// Constant unit directions of ground-truth bones; a zero-length bone is an
/// error since its direction is undefined.
ad::Tensor gt_directions(const ad::Tensor& bones) {
  std::vector<double> out(bones.size());
  for (std::size_t r = 0; r < bones.rows(); ++r) {
    const double x = bones.at(r, 0), y = bones.at(r, 1), z = bones.at(r, 2);
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n == 0.0) {
      throw std::domain_error("loss_dir: ground-truth bone " + std::to_string(r % kNumBones) + " has zero length");
    }
    out[3 * r] = x / n;
    out[3 * r + 1] = y / n;
    out[3 * r + 2] = z / n;
  }
  return ad::Tensor::from_values(bones.shape(), std::move(out));
}

}  // namespace

ad::Tensor loss_pose(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt) {
  require_stacked(pred, 3, "loss_pose");
  require_same(pred, gt, "loss_pose");
  return mean_row_distance(tape, pred, gt);
}

ad::Tensor loss_proj(ad::Tape& tape, const ad::Tensor& pred2d, const ad::Tensor& gt2d) {
  require_stacked(pred2d, 2, "loss_proj");
  require_same(pred2d, gt2d, "loss_proj");
  return mean_row_distance(tape, pred2d, gt2d);
}

ad::Tensor project_batch(ad::Tape& tape, const ad::Tensor& poses) {
  require_stacked(poses, 3, "project_batch");
  return ad::slice_cols(tape, poses, 0, 2);
}

ad::Tensor bone_vectors(ad::Tape& tape, const ad::Tensor& poses, const SkeletonGraph& graph) {
  return bone_matrix(tape, poses, graph);
}

ad::Tensor loss_len(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt, const SkeletonGraph& graph) {
  require_stacked(pred, 3, "loss_len");
  require_same(pred, gt, "loss_len");
  ad::Tape scratch;
  const ad::Tensor gt_len = ad::l2norm_rows(scratch, bone_vectors(scratch, gt, graph));
  const ad::Tensor pred_len = ad::l2norm_rows(tape, bone_vectors(tape, pred, graph), ad::ZeroNormGrad::kSubgradient);
  const ad::Tensor total = ad::sum(tape, ad::abs(tape, ad::sub(tape, pred_len, gt_len.detach())));
  return ad::scale(tape, total, 1.0 / static_cast<double>(batch_of(pred)));
}

ad::Tensor loss_dir(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt, const SkeletonGraph& graph) {
  require_stacked(pred, 3, "loss_dir");
  require_same(pred, gt, "loss_dir");
  ad::Tape scratch;
  const ad::Tensor gt_dir = gt_directions(bone_vectors(scratch, gt, graph));
  const ad::Tensor bones = bone_vectors(tape, pred, graph);
  // div_rows rejects a zero-length predicted bone.
  const ad::Tensor pred_dir = ad::div_rows(tape, bones, ad::l2norm_rows(tape, bones));
  const ad::Tensor gaps = ad::l2norm_rows(tape, ad::sub(tape, pred_dir, gt_dir), ad::ZeroNormGrad::kSubgradient);
  return ad::scale(tape, ad::sum(tape, gaps), 1.0 / static_cast<double>(batch_of(pred)));
}

LossTerms total_loss(ad::Tape& tape, const ad::Tensor& pred, const ad::Tensor& gt,
                     const std::optional<ad::Tensor>& fake_scores, const LossWeights& weights,
                     const SkeletonGraph& graph) {
  LossTerms terms;
  terms.pose = loss_pose(tape, pred, gt);
  ad::Tape scratch;
  terms.proj = loss_proj(tape, project_batch(tape, pred), project_batch(scratch, gt));
  ad::Tensor total =
      ad::add(tape, ad::scale(tape, terms.pose, weights.pose), ad::scale(tape, terms.proj, weights.proj));
  if (weights.len != 0.0) {
    terms.len = loss_len(tape, pred, gt, graph);
    total = ad::add(tape, total, ad::scale(tape, terms.len, weights.len));
  }
  if (weights.dir != 0.0) {
    terms.dir = loss_dir(tape, pred, gt, graph);
    total = ad::add(tape, total, ad::scale(tape, terms.dir, weights.dir));
  }
  if (fake_scores && weights.wass != 0.0) {
    if (fake_scores->size() != batch_of(pred)) {
      throw std::invalid_argument("total_loss: " + std::to_string(fake_scores->size()) + " critic scores for " +
                                  std::to_string(batch_of(pred)) + " samples");
    }
    terms.wass = ad::scale(tape, ad::mean(tape, *fake_scores), -1.0);
    total = ad::add(tape, total, ad::scale(tape, terms.wass, weights.wass));
  }
  terms.total = total;
  return terms;
}

ad::Tensor stack_poses(std::span<const Pose3D> poses) {
  if (poses.empty()) throw std::invalid_argument("stack_poses: empty batch");
  std::vector<double> out;
  out.reserve(poses.size() * kNumJoints * 3);
  for (const Pose3D& p : poses) {
    const auto flat = p.flatten();
    out.insert(out.end(), flat.begin(), flat.end());
  }
  return ad::Tensor::from_values({poses.size() * kNumJoints, 3}, std::move(out));
}

std::vector<Pose3D> unstack_poses(const ad::Tensor& stacked) {
  require_stacked(stacked, 3, "unstack_poses");
  std::vector<Pose3D> out;
  const std::size_t stride = kNumJoints * 3;
  for (std::size_t b = 0; b < batch_of(stacked); ++b) {
    out.push_back(Pose3D::from_flat(std::span<const double>(stacked.values()).subspan(b * stride, stride)));
  }
  return out;
}

namespace {

ad::Tensor single(const Pose3D& p) { return stack_poses(std::span<const Pose3D>(&p, 1)); }

}  // namespace

double loss_pose(const Pose3D& pred, const Pose3D& gt) {
  ad::Tape tape;
  return loss_pose(tape, single(pred), single(gt)).item();
}

double loss_proj(const Pose2D& pred, const Pose2D& gt) {
  const auto p = pred.flatten();
  const auto g = gt.flatten();
  ad::Tape tape;
  return loss_proj(tape, ad::Tensor::from_values({kNumJoints, 2}, {p.begin(), p.end()}),
                   ad::Tensor::from_values({kNumJoints, 2}, {g.begin(), g.end()}))
      .item();
}

double loss_len(const Pose3D& pred, const Pose3D& gt) {
  ad::Tape tape;
  return loss_len(tape, single(pred), single(gt)).item();
}

double loss_dir(const Pose3D& pred, const Pose3D& gt) {
  ad::Tape tape;
  return loss_dir(tape, single(pred), single(gt)).item();
}

double total_loss(const Pose3D& pred, const Pose3D& gt, double fake_score, const LossWeights& weights) {
  ad::Tape tape;
  const auto terms = total_loss(tape, single(pred), single(gt), ad::Tensor::scalar(fake_score), weights);
  return terms.total.item();
}

}  // namespace handpose
