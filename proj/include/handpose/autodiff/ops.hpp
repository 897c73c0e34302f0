#pragma once

#include <cstddef>

#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"

/// Differentiable tensor operations. Every function records its backward rule
/// on the given tape and throws std::invalid_argument on incompatible shapes.
namespace handpose::ad {

/// [m x k] * [k x n] -> [m x n].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// Elementwise a + b. `b` may also be a length-n vector added to every row of
/// an [m x n] matrix.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product of same-shape tensors.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor add_scalar(Tape& tape, const Tensor& a, double offset);

Tensor relu(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);
Tensor exp(Tape& tape, const Tensor& a);
/// |a| with subgradient 0 at exactly 0.
Tensor abs(Tape& tape, const Tensor& a);

/// Concatenation of two rank-2 tensors along the last axis.
Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b);
/// Columns [begin, end) of a rank-2 tensor.
Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end);
Tensor reshape(Tape& tape, const Tensor& a, Shape shape);

/// Sum of all entries as a [1] tensor.
Tensor sum(Tape& tape, const Tensor& a);
/// Mean of all entries as a [1] tensor.
Tensor mean(Tape& tape, const Tensor& a);

enum class ZeroNormGrad {
  kThrow,     ///< backward through a zero row is an error
  kSubgradient,  ///< use gradient 0 for a zero row
};

/// Euclidean norm of each row of [m x n] -> [m].
Tensor l2norm_rows(Tape& tape, const Tensor& a, ZeroNormGrad policy = ZeroNormGrad::kThrow);
/// Divides row i of [m x n] by s[i]. Throws on a zero divisor.
Tensor div_rows(Tape& tape, const Tensor& a, const Tensor& s);

/// Applies a constant [p x q] matrix to each of the B consecutive [q x d]
/// blocks of x: [B*q x d] -> [B*p x d]. Realizes graph propagation,
/// incidence products, node pooling and per-node broadcast on batches.
Tensor block_apply(Tape& tape, const Tensor& m, const Tensor& x);

/// Gram matrix of each [n x d] block of x, flattened row-major per block:
/// [B*n x d] -> [B x n*n].
Tensor block_gram(Tape& tape, const Tensor& x, std::size_t block_rows);

/// Per-row standardization followed by gain * x + bias. Variance uses the
/// population estimator stabilized by kLayerNormEpsilon.
inline constexpr double kLayerNormEpsilon = 1e-5;
Tensor layer_normalize(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias);

}  // namespace handpose::ad
