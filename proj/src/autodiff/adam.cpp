#include "handpose/autodiff/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace handpose::ad {

AdamState AdamState::for_size(std::size_t n) {
  AdamState state;
  state.first_moment.assign(n, 0.0);
  state.second_moment.assign(n, 0.0);
  return state;
}

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state, double lr) {
  if (grad.size() != param.size() || state.first_moment.size() != param.size() ||
      state.second_moment.size() != param.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes disagree");
  }
  if (!std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); })) {
    throw std::domain_error("adam_step: non-finite gradient");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grad[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params) {
  entries_.reserve(params.size());
  for (auto& [name, tensor] : params) {
    entries_.push_back(Entry{name, tensor, AdamState::for_size(tensor.size())});
  }
}

void Adam::step(double lr) {
  // Validate everything first so a rejected step leaves every parameter untouched.
  for (const Entry& e : entries_) {
    if (!e.param.has_grad()) continue;
    const auto g = e.param.grad();
    if (!std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) {
      throw std::domain_error("adam: non-finite gradient for parameter '" + e.name + "'");
    }
  }
  for (Entry& e : entries_) {
    Tensor p = e.param;
    if (p.has_grad()) {
      adam_step(p.mutable_values(), p.grad(), e.state, lr);
    } else {
      const std::vector<double> zeros(p.size(), 0.0);
      adam_step(p.mutable_values(), zeros, e.state, lr);
    }
  }
}

void Adam::zero_grad() {
  for (Entry& e : entries_) e.param.zero_grad();
}

}  // namespace handpose::ad
