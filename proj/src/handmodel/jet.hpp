#pragma once

#include <array>
#include <cmath>

namespace handpose::detail {

// Forward-mode dual number carrying N directional derivatives. Used to get
// exact Jacobians of the kinematic model for its backward rule.
template <int N>
struct Jet {
  double a = 0.0;
  std::array<double, N> v{};

  Jet() = default;
  Jet(double value) : a(value) {}  // NOLINT: implicit constant promotion
  static Jet variable(double value, int index) {
    Jet j(value);
    j.v[static_cast<std::size_t>(index)] = 1.0;
    return j;
  }
};

template <int N>
Jet<N> operator+(const Jet<N>& x, const Jet<N>& y) {
  Jet<N> r(x.a + y.a);
  for (int i = 0; i < N; ++i) r.v[i] = x.v[i] + y.v[i];
  return r;
}

template <int N>
Jet<N> operator-(const Jet<N>& x, const Jet<N>& y) {
  Jet<N> r(x.a - y.a);
  for (int i = 0; i < N; ++i) r.v[i] = x.v[i] - y.v[i];
  return r;
}

template <int N>
Jet<N> operator-(const Jet<N>& x) {
  Jet<N> r(-x.a);
  for (int i = 0; i < N; ++i) r.v[i] = -x.v[i];
  return r;
}

template <int N>
Jet<N> operator*(const Jet<N>& x, const Jet<N>& y) {
  Jet<N> r(x.a * y.a);
  for (int i = 0; i < N; ++i) r.v[i] = x.a * y.v[i] + y.a * x.v[i];
  return r;
}

template <int N>
Jet<N> operator*(double s, const Jet<N>& x) {
  Jet<N> r(s * x.a);
  for (int i = 0; i < N; ++i) r.v[i] = s * x.v[i];
  return r;
}

template <int N>
Jet<N> operator/(const Jet<N>& x, const Jet<N>& y) {
  const double inv = 1.0 / y.a;
  Jet<N> r(x.a * inv);
  for (int i = 0; i < N; ++i) r.v[i] = (x.v[i] - r.a * y.v[i]) * inv;
  return r;
}

template <int N>
Jet<N>& operator+=(Jet<N>& x, const Jet<N>& y) {
  x = x + y;
  return x;
}

template <int N>
Jet<N> sin(const Jet<N>& x) {
  Jet<N> r(std::sin(x.a));
  const double d = std::cos(x.a);
  for (int i = 0; i < N; ++i) r.v[i] = d * x.v[i];
  return r;
}

template <int N>
Jet<N> cos(const Jet<N>& x) {
  Jet<N> r(std::cos(x.a));
  const double d = -std::sin(x.a);
  for (int i = 0; i < N; ++i) r.v[i] = d * x.v[i];
  return r;
}

template <int N>
Jet<N> sqrt(const Jet<N>& x) {
  Jet<N> r(std::sqrt(x.a));
  const double d = 0.5 / r.a;
  for (int i = 0; i < N; ++i) r.v[i] = d * x.v[i];
  return r;
}

template <int N>
double value_of(const Jet<N>& x) {
  return x.a;
}
inline double value_of(double x) { return x; }

}  // namespace handpose::detail
