#pragma once

#include <vector>

#include "handpose/autodiff/random.hpp"
#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"

namespace handpose::ad {

inline constexpr double kSigmaFloor = 1e-12;

/// Power-iteration estimates of the leading singular vectors of one weight
/// matrix. `left` has one entry per row, `right` one per column; both are
/// kept at unit norm.
struct SpectralNormState {
  std::vector<double> left;
  std::vector<double> right;
  int iterations_per_step = 1;

  static SpectralNormState init(std::size_t rows, std::size_t cols, Rng& rng);
};

/// Runs `iterations` power-iteration updates of the singular-vector estimates.
void power_iterate(const Tensor& w, SpectralNormState& state, int iterations);

/// leftᵀ W right, floored at kSigmaFloor.
double sigma_estimate(const Tensor& w, const SpectralNormState& state);

/// W / sigma. With `update` set, first advances the estimates by
/// state.iterations_per_step power iterations. Sigma is a constant for
/// differentiation.
Tensor spectral_normalize(Tape& tape, const Tensor& w, SpectralNormState& state, bool update = true);

}  // namespace handpose::ad
