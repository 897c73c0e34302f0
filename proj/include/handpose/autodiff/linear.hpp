#pragma once

#include <string>
#include <utility>
#include <vector>

#include "handpose/autodiff/random.hpp"
#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"

namespace handpose::ad {

/// Ordered (name, tensor) list; the unit of checkpointing and optimization.
using NamedParams = std::vector<std::pair<std::string, Tensor>>;

/// Dense layer y = x·W + b with W stored [in x out].
struct Linear {
  Tensor weight;
  Tensor bias;

  /// Xavier-uniform weight, zero bias.
  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }

  Tensor forward(Tape& tape, const Tensor& x) const;
  /// Forward with an externally transformed weight (e.g. spectrally normalized).
  Tensor forward_with(Tape& tape, const Tensor& x, const Tensor& effective_weight) const;
  void collect(NamedParams& out, const std::string& prefix) const;
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
};

}  // namespace handpose::ad
