#include "handpose/handmodel/skeleton.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace handpose {

namespace {

// Stand-in anatomy, millimeters and degrees. Finger rays fan out in the palm
// plane from the wrist; each finger's phalanges continue straight along its
// ray in the rest pose.
struct FingerSpec {
  double ray_degrees;      // measured from +y, positive toward -x (thumb side)
  double root_distance;    // wrist to MCP
  double phalanx[3];       // proximal, middle, distal
};

constexpr FingerSpec kFingers[kNumFingers] = {
    {40.0, 80.0, {34.0, 28.0, 24.0}},   // thumb (shortened chain)
    {20.0, 92.0, {42.0, 26.0, 21.0}},   // index
    {0.0, 95.0, {45.0, 29.0, 23.0}},    // middle
    {-20.0, 90.0, {42.0, 27.0, 22.0}},  // ring
    {-40.0, 84.0, {34.0, 21.0, 20.0}},  // little
};

SkeletonTemplate build_template() {
  SkeletonTemplate t;
  t.parent[kWrist] = -1;
  t.finger[kWrist] = -1;
  t.rest_offset[kWrist] = {0.0, 0.0, 0.0};
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const double a = kFingers[f].ray_degrees * std::numbers::pi / 180.0;
    const Vec3 dir{-std::sin(a), std::cos(a), 0.0};
    for (std::size_t k = 0; k < kJointsPerFinger; ++k) {
      const std::size_t j = finger_joint(f, k);
      t.parent[j] = k == 0 ? static_cast<int>(kWrist) : static_cast<int>(j - 1);
      t.finger[j] = static_cast<int>(f);
      const double length = k == 0 ? kFingers[f].root_distance : kFingers[f].phalanx[k - 1];
      t.rest_offset[j] = {dir[0] * length, dir[1] * length, dir[2] * length};
    }
  }
  return t;
}

std::array<Bone, kNumBones> build_bones() {
  std::array<Bone, kNumBones> out{};
  for (std::size_t child = 1; child < kNumJoints; ++child) {
    const auto parent = static_cast<std::size_t>(default_template().parent[child]);
    out[child - 1] = Bone{parent, child};
  }
  return out;
}

}  // namespace

std::array<double, kNumJoints * 3> Pose3D::flatten() const {
  std::array<double, kNumJoints * 3> out{};
  for (std::size_t j = 0; j < kNumJoints; ++j)
    for (std::size_t c = 0; c < 3; ++c) out[3 * j + c] = joints[j][c];
  return out;
}

Pose3D Pose3D::from_flat(std::span<const double> values) {
  if (values.size() != kNumJoints * 3) {
    throw std::invalid_argument("Pose3D needs 63 values, got " + std::to_string(values.size()));
  }
  Pose3D pose;
  for (std::size_t j = 0; j < kNumJoints; ++j)
    for (std::size_t c = 0; c < 3; ++c) pose.joints[j][c] = values[3 * j + c];
  return pose;
}

std::array<double, kNumJoints * 2> Pose2D::flatten() const {
  std::array<double, kNumJoints * 2> out{};
  for (std::size_t j = 0; j < kNumJoints; ++j)
    for (std::size_t c = 0; c < 2; ++c) out[2 * j + c] = joints[j][c];
  return out;
}

std::array<double, kNumParams> HandParams::to_vector() const {
  std::array<double, kNumParams> out{};
  std::size_t i = 0;
  for (double v : theta) out[i++] = v;
  for (double v : beta) out[i++] = v;
  for (double v : cam_rotation) out[i++] = v;
  for (double v : cam_translation) out[i++] = v;
  out[i] = cam_scale;
  return out;
}

HandParams HandParams::from_vector(std::span<const double> values) {
  if (values.size() != kNumParams) {
    throw std::invalid_argument("HandParams needs 33 values, got " + std::to_string(values.size()));
  }
  HandParams p;
  std::size_t i = 0;
  for (double& v : p.theta) v = values[i++];
  for (double& v : p.beta) v = values[i++];
  for (double& v : p.cam_rotation) v = values[i++];
  for (double& v : p.cam_translation) v = values[i++];
  p.cam_scale = values[i];
  return p;
}

const SkeletonTemplate& default_template() {
  static const SkeletonTemplate kTemplate = build_template();
  return kTemplate;
}

Pose3D rest_pose(const SkeletonTemplate& skeleton) {
  Pose3D pose;
  for (std::size_t j = 1; j < kNumJoints; ++j) {
    const auto& p = pose.joints[static_cast<std::size_t>(skeleton.parent[j])];
    for (std::size_t c = 0; c < 3; ++c) pose.joints[j][c] = p[c] + skeleton.rest_offset[j][c];
  }
  return pose;
}

const std::array<Bone, kNumBones>& bones() {
  static const std::array<Bone, kNumBones> kBones = build_bones();
  return kBones;
}

}  // namespace handpose
