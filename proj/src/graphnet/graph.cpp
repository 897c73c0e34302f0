#include "handpose/graphnet/graph.hpp"

#include <cmath>
#include <stdexcept>

#include "handpose/autodiff/ops.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

ad::Tensor normalize_adjacency(const ad::Tensor& adjacency) {
  if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("adjacency must be square, got " + ad::shape_string(adjacency.shape()));
  }
  const std::size_t n = adjacency.rows();
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 1.0;  // self-loop
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency.at(i, j);
      if (a != adjacency.at(j, i)) throw std::invalid_argument("adjacency must be symmetric");
      if (a != 0.0 && a != 1.0) throw std::invalid_argument("adjacency must be binary");
      degree += a;
    }
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency.at(i, j) + (i == j ? 1.0 : 0.0);
      out[i * n + j] = inv_sqrt_degree[i] * a * inv_sqrt_degree[j];
    }
  return ad::Tensor::from_values({n, n}, std::move(out));
}

SkeletonGraph build_hand_graph() {
  std::vector<double> adjacency(kNumJoints * kNumJoints, 0.0);
  std::vector<double> incidence(kNumBones * kNumJoints, 0.0);
  for (std::size_t i = 0; i < kNumBones; ++i) {
    const Bone& b = bones()[i];
    adjacency[b.parent * kNumJoints + b.child] = 1.0;
    adjacency[b.child * kNumJoints + b.parent] = 1.0;
    incidence[i * kNumJoints + b.child] = 1.0;
    incidence[i * kNumJoints + b.parent] = -1.0;
  }
  SkeletonGraph g;
  g.adjacency = ad::Tensor::from_values({kNumJoints, kNumJoints}, std::move(adjacency));
  g.normalized = normalize_adjacency(g.adjacency);
  g.incidence = ad::Tensor::from_values({kNumBones, kNumJoints}, std::move(incidence));
  return g;
}

const SkeletonGraph& hand_graph() {
  static const SkeletonGraph kGraph = build_hand_graph();
  return kGraph;
}

ad::Tensor bone_matrix(ad::Tape& tape, const ad::Tensor& poses, const SkeletonGraph& graph) {
  if (poses.rank() != 2 || poses.cols() != 3 || poses.rows() % kNumJoints != 0) {
    throw std::invalid_argument("bone_matrix: poses must be [B*21 x 3], got " + ad::shape_string(poses.shape()));
  }
  return ad::block_apply(tape, graph.incidence, poses);
}

}  // namespace handpose
