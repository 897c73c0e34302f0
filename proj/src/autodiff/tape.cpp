#include "handpose/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace handpose::ad {

namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

Tensor Tape::record(Tensor output, std::vector<Tensor> inputs, BackwardFn backward) {
  if (!all_finite(output.values())) {
    throw std::domain_error("operation produced a non-finite value");
  }
  const bool tracked = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
  output.set_requires_grad(tracked);
  if (tracked) ops_.push_back(Op{std::move(inputs), output, std::move(backward)});
  return output;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward needs a scalar loss, got shape " +
                                shape_string(loss.shape()));
  }
  auto it = std::find_if(ops_.rbegin(), ops_.rend(),
                         [&](const Op& op) { return op.output.is_same(loss); });
  if (it == ops_.rend()) throw std::invalid_argument("loss was not produced on this tape");

  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (; it != ops_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward(it->output, it->inputs);
  }
  for (const Op& op : ops_) {
    for (const Tensor& input : op.inputs) {
      if (input.has_grad() && !all_finite(input.grad())) {
        throw std::domain_error("backward produced a non-finite gradient");
      }
    }
  }
}

}  // namespace handpose::ad
