#pragma once

#include <array>
#include <span>

#include "handpose/autodiff/tape.hpp"
#include "handpose/autodiff/tensor.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Rotation matrix of an axis-angle vector. Angles below 1e-8 use the
/// Taylor series, so the zero vector maps to the identity exactly.
Mat3 rodrigues(const Vec3& axis_angle);

/// Joint positions in the canonical frame (wrist at the origin). Each bone
/// offset is scaled by β_global·β_finger and rotated by its chain's
/// accumulated joint rotations.
Pose3D forward_kinematics(std::span<const double, kNumAngles> theta, std::span<const double, kNumShape> beta,
                          const SkeletonTemplate& skeleton = default_template());

/// c_s · R(c_r) · P + c_t applied jointwise. Throws std::invalid_argument if
/// c_s <= 0.
Pose3D apply_camera(const Pose3D& pose, const Vec3& rotation, const Vec3& translation, double scale);

/// Full hand model: forward kinematics followed by the camera transform.
Pose3D hand_model_pose(const HandParams& params, const SkeletonTemplate& skeleton = default_template());

/// Orthographic projection (drops z).
Pose2D project_2d(const Pose3D& pose);

/// Differentiable hand model over a batch: [B x 33] decoded parameters in
/// decode order to [B x 63] joint coordinates. The backward rule uses exact
/// forward-mode Jacobians of the kinematic chain.
ad::Tensor hand_model(ad::Tape& tape, const ad::Tensor& params,
                      const SkeletonTemplate& skeleton = default_template());

}  // namespace handpose
