#pragma once

// Central finite-difference gradient oracle for tests. Deliberately uses only
// forward evaluations, so it is independent of every backward rule it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "handpose/autodiff/random.hpp"
#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"

namespace handpose::testing {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
// Denominator floor: below this gradient magnitude the comparison is absolute.
inline constexpr double kRelativeFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
}

using ScalarFn = std::function<ad::Tensor(ad::Tape&, std::vector<ad::Tensor>&)>;

/// Compares the tape gradient of fn(inputs) against central differences for
/// every entry of every input that requires a gradient.
inline GradCheckResult gradcheck(const ScalarFn& fn, std::vector<ad::Tensor> inputs,
                                 double step = kFiniteDifferenceStep) {
  for (auto& t : inputs) t.zero_grad();
  {
    ad::Tape tape;
    ad::Tensor loss = fn(tape, inputs);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    if (t.requires_grad() && t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.size(), 0.0);
    }
  }
  auto evaluate = [&]() {
    ad::Tape tape;
    return fn(tape, inputs).item();
  };
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    auto values = inputs[k].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double plus = evaluate();
      values[i] = original - step;
      const double minus = evaluate();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = relative_error(analytic[k][i], numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        std::ostringstream where;
        where << "input " << k << " entry " << i << ": analytic " << analytic[k][i] << " numeric " << numeric;
        result.worst = where.str();
      }
    }
  }
  for (auto& t : inputs) t.zero_grad();
  return result;
}

/// Like gradcheck, but compares only `per_input` randomly chosen entries of
/// each input (all entries when the input is smaller). Used for networks
/// whose full finite-difference sweep would take minutes.
inline GradCheckResult gradcheck_sampled(const ScalarFn& fn, std::vector<ad::Tensor> inputs, std::size_t per_input,
                                         Rng& rng, double step = kFiniteDifferenceStep) {
  for (auto& t : inputs) t.zero_grad();
  {
    ad::Tape tape;
    ad::Tensor loss = fn(tape, inputs);
    tape.backward(loss);
  }
  auto evaluate = [&]() {
    ad::Tape tape;
    return fn(tape, inputs).item();
  };
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    const std::vector<double> analytic = inputs[k].has_grad()
                                             ? std::vector<double>(inputs[k].grad().begin(), inputs[k].grad().end())
                                             : std::vector<double>(inputs[k].size(), 0.0);
    auto values = inputs[k].mutable_values();
    const std::size_t count = std::min(per_input, values.size());
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t i = count == values.size() ? n : static_cast<std::size_t>(rng.below(values.size()));
      const double original = values[i];
      values[i] = original + step;
      const double plus = evaluate();
      values[i] = original - step;
      const double minus = evaluate();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = relative_error(analytic[i], numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        std::ostringstream where;
        where << "input " << k << " entry " << i << ": analytic " << analytic[i] << " numeric " << numeric;
        result.worst = where.str();
      }
    }
  }
  for (auto& t : inputs) t.zero_grad();
  return result;
}

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                                bool requires_grad = true) {
  std::vector<double> values(ad::shape_size(shape));
  for (double& v : values) v = rng.uniform(lo, hi);
  return ad::Tensor::from_values(std::move(shape), std::move(values), requires_grad);
}

}  // namespace handpose::testing
