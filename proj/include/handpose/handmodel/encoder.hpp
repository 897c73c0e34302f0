#pragma once

#include <span>
#include <string>

#include "handpose/autodiff/linear.hpp"
#include "handpose/handmodel/render.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

inline constexpr std::size_t kEncoderHidden = 128;
inline constexpr std::size_t kLatentDim = 32;
inline constexpr std::size_t kFeatureDim = 64;

/// Two-layer perceptron over a flattened rendering: 1024 -> hidden -> out,
/// relu after the hidden layer.
struct Encoder {
  ad::Linear hidden;
  ad::Linear output;

  static Encoder init(std::size_t out_dim, Rng& rng, std::size_t hidden_dim = kEncoderHidden);

  /// [B x 1024] -> [B x out_dim].
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& renderings) const;
  void collect(ad::NamedParams& out, const std::string& prefix) const;
};

/// Linear map from the latent code to the 33 hand-model parameters, with
/// β = 1 + 0.3·tanh(raw) and c_s = exp(raw); θ, c_r and c_t pass through.
struct ParamDecoder {
  ad::Linear linear;

  static ParamDecoder init(Rng& rng, std::size_t latent_dim = kLatentDim);

  /// [B x latent] -> [B x 33] in decode order.
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& latent) const;
  void collect(ad::NamedParams& out, const std::string& prefix) const;
};

/// Single-sample convenience wrapper around ParamDecoder::forward.
HandParams decode_params(std::span<const double> latent, const ParamDecoder& decoder);

/// Flattens a batch of renderings to a [B x 1024] constant tensor.
ad::Tensor stack_renderings(std::span<const Rendering* const> renderings);

}  // namespace handpose
