#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

/// Average Euclidean joint error in mm over all joints of all samples.
double metric_mean_error(std::span<const Pose3D> pred, std::span<const Pose3D> gt);

/// Average angle-free bone direction gap: mean over bones and samples of
/// |b/|b| - b̂/|b̂||. Zero-length bones contribute a gap of 1.
double metric_bone_direction_error(std::span<const Pose3D> pred, std::span<const Pose3D> gt);

struct PckCurve {
  std::vector<double> thresholds_mm;
  std::vector<double> values;  ///< fraction of joints within each threshold
  double auc = 0.0;            ///< trapezoidal area over the threshold span, in [0, 1]
};

/// 16 evenly spaced thresholds from 20 to 50 mm.
std::vector<double> default_pck_thresholds();

/// Fraction of joints whose error does not exceed each threshold. Thresholds
/// must be strictly increasing.
PckCurve metric_pck(std::span<const Pose3D> pred, std::span<const Pose3D> gt,
                    std::span<const double> thresholds_mm);
PckCurve metric_pck(std::span<const Pose3D> pred, std::span<const Pose3D> gt);

/// `threshold_mm,pck` rows followed by a `mean_error_mm,auc` summary.
void write_pck_csv(std::ostream& out, const PckCurve& curve, double mean_error_mm);

}  // namespace handpose
