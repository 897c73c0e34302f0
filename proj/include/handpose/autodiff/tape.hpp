#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "handpose/autodiff/tensor.hpp"

namespace handpose::ad {

/// Ordered record of differentiable operations for one forward pass.
///
/// Operations append themselves in execution order, so the record is always
/// topologically sorted. backward() walks it once in reverse. A tape is meant
/// to live for a single training step; call clear() or let it go out of scope.
class Tape {
 public:
  /// Propagates output.grad into the inputs that require gradients.
  using BackwardFn = std::function<void(const Tensor& output, std::vector<Tensor>& inputs)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `output` as produced from `inputs`. Sets output.requires_grad
  /// when any input requires it; ops whose inputs are all constants are not
  /// recorded. Rejects non-finite outputs.
  Tensor record(Tensor output, std::vector<Tensor> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and applies every recorded backward rule that
  /// precedes the loss, in reverse order. Gradients accumulate additively.
  void backward(const Tensor& loss);

  void clear() { ops_.clear(); }
  std::size_t size() const { return ops_.size(); }

 private:
  struct Op {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Op> ops_;
};

}  // namespace handpose::ad
