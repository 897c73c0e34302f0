#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "handpose/autodiff/tensor.hpp"

namespace handpose::ad {

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(std::size_t n);
};

/// One bias-corrected Adam update of `param` in place. Throws
/// std::domain_error, leaving param and state untouched, if any gradient
/// entry is non-finite.
void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state, double lr);

/// Adam over a fixed list of named parameter tensors. Parameters that received
/// no gradient this step are updated with a zero gradient.
class Adam {
 public:
  struct Entry {
    std::string name;
    Tensor param;
    AdamState state;
  };

  Adam() = default;
  explicit Adam(std::vector<std::pair<std::string, Tensor>> params);

  void step(double lr);
  void zero_grad();

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace handpose::ad
