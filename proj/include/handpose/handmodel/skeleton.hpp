#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace handpose {

inline constexpr std::size_t kNumJoints = 21;
inline constexpr std::size_t kNumBones = 20;
inline constexpr std::size_t kNumFingers = 5;
inline constexpr std::size_t kJointsPerFinger = 4;
inline constexpr std::size_t kNumAngles = 20;
inline constexpr std::size_t kNumShape = 6;
/// θ(20) + β(6) + c_r(3) + c_t(3) + c_s(1).
inline constexpr std::size_t kNumParams = 33;

/// Joint order: wrist, then thumb, index, middle, ring, little, each listed
/// proximal to tip. Finger f occupies joints 1 + 4f .. 4 + 4f.
inline constexpr std::size_t kWrist = 0;
inline constexpr std::size_t finger_joint(std::size_t finger, std::size_t k) { return 1 + 4 * finger + k; }

using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

/// 21 joints in millimeters.
struct Pose3D {
  std::array<Vec3, kNumJoints> joints{};

  bool operator==(const Pose3D&) const = default;
  std::array<double, kNumJoints * 3> flatten() const;
  static Pose3D from_flat(std::span<const double> values);
};

/// Orthographic image-plane coordinates of the 21 joints, millimeters.
struct Pose2D {
  std::array<Vec2, kNumJoints> joints{};

  bool operator==(const Pose2D&) const = default;
  std::array<double, kNumJoints * 2> flatten() const;
};

/// Latent code of the hand model. Per finger, θ holds MCP flexion, MCP
/// abduction, PIP flexion, DIP flexion (radians). β holds a global length
/// scale followed by one scale per finger.
struct HandParams {
  std::array<double, kNumAngles> theta{};
  std::array<double, kNumShape> beta{1, 1, 1, 1, 1, 1};
  Vec3 cam_rotation{};     ///< axis-angle, radians
  Vec3 cam_translation{};  ///< millimeters
  double cam_scale = 1.0;

  bool operator==(const HandParams&) const = default;
  /// Concatenation in decode order θ, β, c_r, c_t, c_s.
  std::array<double, kNumParams> to_vector() const;
  static HandParams from_vector(std::span<const double> values);
};

/// Kinematic tree of the 21-joint hand with rest-pose bone offsets.
///
/// Canonical frame: wrist at the origin, palm in the x-y plane with fingers
/// pointing along +y, palm facing +z. Positive flexion curls a finger toward
/// +z; abduction rotates about the palm normal.
struct SkeletonTemplate {
  std::array<int, kNumJoints> parent{};
  /// Offset from the parent joint in the rest pose, mm. Zero for the wrist.
  std::array<Vec3, kNumJoints> rest_offset{};
  /// Finger index per joint, -1 for the wrist.
  std::array<int, kNumJoints> finger{};
};

const SkeletonTemplate& default_template();

/// Rest-pose joint positions (accumulated offsets).
Pose3D rest_pose(const SkeletonTemplate& skeleton);

/// Bone endpoints in incidence-row order: bone i runs from parent to child,
/// finger-major, proximal to distal.
struct Bone {
  std::size_t parent;
  std::size_t child;
};
const std::array<Bone, kNumBones>& bones();

}  // namespace handpose
