#include "handpose/losses/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace handpose {
namespace {

void require_pairs(std::span<const Pose3D> pred, std::span<const Pose3D> gt, const char* what) {
  if (pred.empty()) throw std::invalid_argument(std::string(what) + ": empty prediction set");
  if (pred.size() != gt.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(gt.size()) + " ground-truth poses");
  }
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 unit_bone(const Pose3D& p, const Bone& bone, bool& degenerate) {
  const Vec3& c = p.joints[bone.child];
  const Vec3& q = p.joints[bone.parent];
  Vec3 v{c[0] - q[0], c[1] - q[1], c[2] - q[2]};
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  degenerate = n == 0.0;
  if (!degenerate)
    for (double& x : v) x /= n;
  return v;
}

}  // namespace

double metric_mean_error(std::span<const Pose3D> pred, std::span<const Pose3D> gt) {
  require_pairs(pred, gt, "metric_mean_error");
  double total = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s)
    for (std::size_t j = 0; j < kNumJoints; ++j) total += distance(pred[s].joints[j], gt[s].joints[j]);
  return total / static_cast<double>(pred.size() * kNumJoints);
}

double metric_bone_direction_error(std::span<const Pose3D> pred, std::span<const Pose3D> gt) {
  require_pairs(pred, gt, "metric_bone_direction_error");
  double total = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (const Bone& bone : bones()) {
      bool pred_zero = false, gt_zero = false;
      const Vec3 a = unit_bone(pred[s], bone, pred_zero);
      const Vec3 b = unit_bone(gt[s], bone, gt_zero);
      total += (pred_zero || gt_zero) ? 1.0 : distance(a, b);
    }
  }
  return total / static_cast<double>(pred.size() * kNumBones);
}

std::vector<double> default_pck_thresholds() {
  std::vector<double> t(16);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 20.0 + 2.0 * static_cast<double>(i);
  return t;
}

PckCurve metric_pck(std::span<const Pose3D> pred, std::span<const Pose3D> gt, std::span<const double> thresholds_mm) {
  require_pairs(pred, gt, "metric_pck");
  if (thresholds_mm.empty()) throw std::invalid_argument("metric_pck: no thresholds");
  for (std::size_t i = 1; i < thresholds_mm.size(); ++i) {
    if (!(thresholds_mm[i] > thresholds_mm[i - 1])) {
      throw std::invalid_argument("metric_pck: thresholds must be strictly increasing");
    }
  }
  std::vector<double> errors;
  errors.reserve(pred.size() * kNumJoints);
  for (std::size_t s = 0; s < pred.size(); ++s)
    for (std::size_t j = 0; j < kNumJoints; ++j) errors.push_back(distance(pred[s].joints[j], gt[s].joints[j]));

  PckCurve curve;
  curve.thresholds_mm.assign(thresholds_mm.begin(), thresholds_mm.end());
  for (double t : thresholds_mm) {
    std::size_t within = 0;
    for (double e : errors) within += e <= t ? 1 : 0;
    curve.values.push_back(static_cast<double>(within) / static_cast<double>(errors.size()));
  }
  if (curve.values.size() == 1) {
    curve.auc = curve.values.front();
  } else {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.values.size(); ++i) {
      area += 0.5 * (curve.values[i] + curve.values[i - 1]) * (thresholds_mm[i] - thresholds_mm[i - 1]);
    }
    curve.auc = area / (thresholds_mm.back() - thresholds_mm.front());
  }
  return curve;
}

PckCurve metric_pck(std::span<const Pose3D> pred, std::span<const Pose3D> gt) {
  const auto thresholds = default_pck_thresholds();
  return metric_pck(pred, gt, thresholds);
}

void write_pck_csv(std::ostream& out, const PckCurve& curve, double mean_error_mm) {
  out << std::setprecision(10);
  out << "threshold_mm,pck\n";
  for (std::size_t i = 0; i < curve.values.size(); ++i) out << curve.thresholds_mm[i] << ',' << curve.values[i] << '\n';
  out << "mean_error_mm,auc\n";
  out << mean_error_mm << ',' << curve.auc << '\n';
}

}  // namespace handpose
