#include "handpose/handmodel/kinematics.hpp"

#include <stdexcept>
#include <vector>

#include "kinematics_impl.hpp"

namespace handpose {

namespace {

using ParamJet = detail::Jet<static_cast<int>(kNumParams)>;

void require_positive_scale(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("camera scale must be positive, got " + std::to_string(scale));
}

}  // namespace

Mat3 rodrigues(const Vec3& axis_angle) { return detail::rodrigues<double>(axis_angle); }

Pose3D forward_kinematics(std::span<const double, kNumAngles> theta, std::span<const double, kNumShape> beta,
                          const SkeletonTemplate& skeleton) {
  Pose3D pose;
  pose.joints = detail::forward_kinematics<double>(theta.data(), beta.data(), skeleton);
  return pose;
}

Pose3D apply_camera(const Pose3D& pose, const Vec3& rotation, const Vec3& translation, double scale) {
  require_positive_scale(scale);
  Pose3D out = pose;
  detail::apply_camera<double>(out.joints, rotation, translation, scale);
  return out;
}

Pose3D hand_model_pose(const HandParams& params, const SkeletonTemplate& skeleton) {
  return apply_camera(forward_kinematics(params.theta, params.beta, skeleton), params.cam_rotation,
                      params.cam_translation, params.cam_scale);
}

Pose2D project_2d(const Pose3D& pose) {
  Pose2D out;
  for (std::size_t j = 0; j < kNumJoints; ++j) out.joints[j] = {pose.joints[j][0], pose.joints[j][1]};
  return out;
}

ad::Tensor hand_model(ad::Tape& tape, const ad::Tensor& params, const SkeletonTemplate& skeleton) {
  if (params.rank() != 2 || params.cols() != kNumParams) {
    throw std::invalid_argument("hand_model expects [B x 33] parameters, got " + ad::shape_string(params.shape()));
  }
  const std::size_t batch = params.rows();
  constexpr std::size_t kOut = kNumJoints * 3;
  const auto pv = params.values();
  std::vector<double> out(batch * kOut);
  const bool tracked = params.requires_grad();
  // jacobian[b][o * 33 + i] = d out[b][o] / d params[b][i]
  std::vector<double> jacobian(tracked ? batch * kOut * kNumParams : 0);

  for (std::size_t b = 0; b < batch; ++b) {
    const double* p = pv.data() + b * kNumParams;
    require_positive_scale(p[32]);
    if (!tracked) {
      auto joints = detail::forward_kinematics<double>(p, p + 20, skeleton);
      detail::apply_camera<double>(joints, {p[26], p[27], p[28]}, {p[29], p[30], p[31]}, p[32]);
      for (std::size_t j = 0; j < kNumJoints; ++j)
        for (std::size_t c = 0; c < 3; ++c) out[b * kOut + 3 * j + c] = joints[j][c];
      continue;
    }
    std::array<ParamJet, kNumParams> x;
    for (std::size_t i = 0; i < kNumParams; ++i) x[i] = ParamJet::variable(p[i], static_cast<int>(i));
    auto joints = detail::forward_kinematics<ParamJet>(x.data(), x.data() + 20, skeleton);
    detail::apply_camera<ParamJet>(joints, {x[26], x[27], x[28]}, {x[29], x[30], x[31]}, x[32]);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t o = 3 * j + c;
        out[b * kOut + o] = joints[j][c].a;
        std::copy(joints[j][c].v.begin(), joints[j][c].v.end(),
                  jacobian.begin() + static_cast<std::ptrdiff_t>((b * kOut + o) * kNumParams));
      }
    }
  }
  return tape.record(ad::Tensor::from_values({batch, kOut}, std::move(out)), {params},
                     [batch, jacobian = std::move(jacobian)](const ad::Tensor& y, std::vector<ad::Tensor>& in) {
                       const auto dy = y.grad();
                       auto dp = in[0].mutable_grad();
                       for (std::size_t b = 0; b < batch; ++b)
                         for (std::size_t o = 0; o < kOut; ++o) {
                           const double g = dy[b * kOut + o];
                           const double* row = jacobian.data() + (b * kOut + o) * kNumParams;
                           for (std::size_t i = 0; i < kNumParams; ++i) dp[b * kNumParams + i] += g * row[i];
                         }
                     });
}

}  // namespace handpose
