#pragma once

#include <cstddef>
#include <vector>

#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"

namespace handpose {

/// Hand skeleton as a graph over the 21 joints. All members are constants
/// built once and shared by every forward pass.
struct SkeletonGraph {
  ad::Tensor adjacency;   ///< [21 x 21] binary, symmetric, zero diagonal
  ad::Tensor normalized;  ///< [21 x 21] D^-1/2 (A + I) D^-1/2
  ad::Tensor incidence;   ///< [20 x 21]; row i = child_i - parent_i
};

/// Wrist-to-MCP edges plus the three chain edges of each finger. Incidence
/// rows follow the bone order of handpose::bones().
const SkeletonGraph& hand_graph();
SkeletonGraph build_hand_graph();

/// Symmetric normalization with self-loops of an n x n binary symmetric
/// adjacency: D̃^-1/2 (A + I) D̃^-1/2 with D̃ the degrees of A + I.
ad::Tensor normalize_adjacency(const ad::Tensor& adjacency);

/// Bone vectors of a batch of poses: incidence · P per sample,
/// [B*21 x 3] -> [B*20 x 3]. This is the KCS layer; the bone losses use it
/// too.
ad::Tensor bone_matrix(ad::Tape& tape, const ad::Tensor& poses, const SkeletonGraph& graph = hand_graph());

}  // namespace handpose
