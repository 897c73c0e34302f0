#include "handpose/autodiff/spectral_norm.hpp"

#include <cmath>
#include <stdexcept>

#include "handpose/autodiff/ops.hpp"

namespace handpose::ad {

namespace {

// Normalizes v in place; a zero vector keeps the previous estimate.
void normalize_into(std::vector<double>& target, const std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm <= kSigmaFloor) return;
  for (std::size_t i = 0; i < v.size(); ++i) target[i] = v[i] / norm;
}

void check_shapes(const Tensor& w, const SpectralNormState& state) {
  if (w.rank() != 2 || state.left.size() != w.rows() || state.right.size() != w.cols()) {
    throw std::invalid_argument("spectral norm state does not match weight shape " + shape_string(w.shape()));
  }
}

}  // namespace

SpectralNormState SpectralNormState::init(std::size_t rows, std::size_t cols, Rng& rng) {
  SpectralNormState state;
  std::vector<double> u(rows), v(cols);
  for (double& x : u) x = rng.uniform(-1.0, 1.0);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  state.left.assign(rows, 1.0 / std::sqrt(static_cast<double>(rows)));
  state.right.assign(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
  normalize_into(state.left, u);
  normalize_into(state.right, v);
  return state;
}

void power_iterate(const Tensor& w, SpectralNormState& state, int iterations) {
  check_shapes(w, state);
  const std::size_t m = w.rows(), n = w.cols();
  const auto wv = w.values();
  std::vector<double> right(n), left(m);
  for (int it = 0; it < iterations; ++it) {
    std::fill(right.begin(), right.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) right[c] += wv[r * n + c] * state.left[r];
    normalize_into(state.right, right);
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) acc += wv[r * n + c] * state.right[c];
      left[r] = acc;
    }
    normalize_into(state.left, left);
  }
}

double sigma_estimate(const Tensor& w, const SpectralNormState& state) {
  check_shapes(w, state);
  const std::size_t m = w.rows(), n = w.cols();
  const auto wv = w.values();
  double sigma = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += wv[r * n + c] * state.right[c];
    sigma += state.left[r] * acc;
  }
  return std::max(sigma, kSigmaFloor);
}

Tensor spectral_normalize(Tape& tape, const Tensor& w, SpectralNormState& state, bool update) {
  if (update) power_iterate(w, state, state.iterations_per_step);
  return scale(tape, w, 1.0 / sigma_estimate(w, state));
}

}  // namespace handpose::ad
