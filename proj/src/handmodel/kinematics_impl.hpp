#pragma once

// Scalar-generic kinematic hand model. Instantiated with double for plain
// evaluation and with Jet<33> to obtain exact Jacobians.

#include <array>
#include <cmath>

#include "handpose/handmodel/skeleton.hpp"
#include "jet.hpp"

namespace handpose::detail {

template <typename T>
using V3 = std::array<T, 3>;
template <typename T>
using M3 = std::array<std::array<T, 3>, 3>;

inline constexpr double kRodriguesSmallAngle = 1e-8;

template <typename T>
M3<T> identity3() {
  M3<T> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = T(i == j ? 1.0 : 0.0);
  return r;
}

template <typename T>
M3<T> mul(const M3<T>& a, const M3<T>& b) {
  M3<T> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return r;
}

template <typename T, typename U>
V3<T> rotate(const M3<T>& m, const V3<U>& x) {
  V3<T> r{};
  for (int i = 0; i < 3; ++i) r[i] = m[i][0] * T(x[0]) + m[i][1] * T(x[1]) + m[i][2] * T(x[2]);
  return r;
}

// Rotation by `angle` about a fixed unit axis. Exactly the identity at angle 0.
template <typename T>
M3<T> rot_axis(const Vec3& u, const T& angle) {
  using std::cos;
  using std::sin;
  const T c = cos(angle), s = sin(angle);
  const T one_minus_c = T(1.0) - c;
  const double k[3][3] = {{0.0, -u[2], u[1]}, {u[2], 0.0, -u[0]}, {-u[1], u[0], 0.0}};
  M3<T> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = (i == j ? c : T(0.0)) + k[i][j] * s + (u[i] * u[j]) * one_minus_c;
  return r;
}

template <typename T>
M3<T> rodrigues(const V3<T>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T sq = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
  // K is the cross-product matrix of w (not of the unit axis).
  M3<T> k{};
  k[0][0] = T(0.0);
  k[0][1] = -w[2];
  k[0][2] = w[1];
  k[1][0] = w[2];
  k[1][1] = T(0.0);
  k[1][2] = -w[0];
  k[2][0] = -w[1];
  k[2][1] = w[0];
  k[2][2] = T(0.0);
  const M3<T> k2 = mul(k, k);
  T a, b;
  if (value_of(sq) < kRodriguesSmallAngle * kRodriguesSmallAngle) {
    // Series: sin(t)/t ~ 1 - t^2/6, (1 - cos t)/t^2 ~ 1/2 - t^2/24.
    a = T(1.0) - (1.0 / 6.0) * sq;
    b = T(0.5) - (1.0 / 24.0) * sq;
  } else {
    const T angle = sqrt(sq);
    a = sin(angle) / angle;
    b = (T(1.0) - cos(angle)) / sq;
  }
  M3<T> r = identity3<T>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = r[i][j] + a * k[i][j] + b * k2[i][j];
  return r;
}

struct FingerAxes {
  Vec3 lateral;  ///< flexion axis
  Vec3 normal;   ///< abduction axis (palm normal)
};

inline FingerAxes finger_axes(const SkeletonTemplate& skeleton, std::size_t finger) {
  const Vec3& o = skeleton.rest_offset[finger_joint(finger, 1)];
  const double len = std::sqrt(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]);
  const Vec3 d{o[0] / len, o[1] / len, o[2] / len};
  const Vec3 n{0.0, 0.0, 1.0};
  return {{d[1] * n[2] - d[2] * n[1], d[2] * n[0] - d[0] * n[2], d[0] * n[1] - d[1] * n[0]}, n};
}

/// Canonical-space joint positions for angles θ[20] and scales β[6].
///
/// Joint rotations are expressed about the finger's rest-pose axes in the
/// canonical frame; the MCP composes abduction then flexion and each later
/// joint appends its flexion to the chain.
template <typename T>
std::array<V3<T>, kNumJoints> forward_kinematics(const T* theta, const T* beta, const SkeletonTemplate& skeleton) {
  std::array<V3<T>, kNumJoints> joints{};
  for (auto& j : joints) j = {T(0.0), T(0.0), T(0.0)};
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const T s = beta[0] * beta[1 + f];
    const FingerAxes axes = finger_axes(skeleton, f);

    const std::size_t mcp = finger_joint(f, 0);
    for (int c = 0; c < 3; ++c) joints[mcp][c] = s * T(skeleton.rest_offset[mcp][c]);

    const T* angles = theta + 4 * f;
    const M3<T> joint_rotations[3] = {mul(rot_axis(axes.normal, angles[1]), rot_axis(axes.lateral, angles[0])),
                                      rot_axis(axes.lateral, angles[2]), rot_axis(axes.lateral, angles[3])};
    M3<T> accumulated = identity3<T>();
    for (std::size_t k = 1; k < kJointsPerFinger; ++k) {
      accumulated = mul(accumulated, joint_rotations[k - 1]);
      const std::size_t j = finger_joint(f, k);
      const V3<T> offset = rotate(accumulated, skeleton.rest_offset[j]);
      for (int c = 0; c < 3; ++c) joints[j][c] = joints[j - 1][c] + s * offset[c];
    }
  }
  return joints;
}

/// c_s * R(c_r) p + c_t for every joint.
template <typename T>
void apply_camera(std::array<V3<T>, kNumJoints>& joints, const V3<T>& rotation, const V3<T>& translation,
                  const T& scale) {
  const M3<T> r = rodrigues(rotation);
  for (auto& p : joints) {
    const V3<T> q = rotate(r, p);
    for (int c = 0; c < 3; ++c) p[c] = scale * q[c] + translation[c];
  }
}

}  // namespace handpose::detail
