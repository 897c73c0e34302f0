#include "handpose/autodiff/linear.hpp"

#include "handpose/autodiff/ops.hpp"

namespace handpose::ad {

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  return Linear{xavier_uniform(in, out, rng), Tensor::zeros({out}, true)};
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return Linear{Tensor::zeros({in, out}, true), Tensor::zeros({out}, true)};
}

Tensor Linear::forward(Tape& tape, const Tensor& x) const { return forward_with(tape, x, weight); }

Tensor Linear::forward_with(Tape& tape, const Tensor& x, const Tensor& effective_weight) const {
  return add(tape, matmul(tape, x, effective_weight), bias);
}

void Linear::collect(NamedParams& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
}

}  // namespace handpose::ad
