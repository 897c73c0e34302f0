#pragma once

#include <cstdint>
#include <string_view>

#include "handpose/autodiff/tensor.hpp"

namespace handpose {

/// Seedable generator with a fixed, library-independent output sequence
/// (splitmix64 seeding into xoshiro256**). Distributions are implemented
/// here rather than via <random> so sequences are identical across
/// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_[4];
};

/// Derives an independent stream seed from a master seed and a label, so
/// components (dataset, init, shuffle, critic) never share random draws.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

namespace ad {

/// Uniform in +-sqrt(6 / (fan_in + fan_out)) for a [fan_in x fan_out] weight.
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace ad
}  // namespace handpose
