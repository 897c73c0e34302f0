#include "handpose/handmodel/render.hpp"

#include <algorithm>
#include <cmath>

namespace handpose {

double world_to_grid(double mm) { return (mm + kRenderHalfWidth) / kRenderCellPitch; }

Rendering render(const Pose2D& pose) {
  Rendering out;
  const double inv_two_sigma_sq = 1.0 / (2.0 * kRenderBlobSigma * kRenderBlobSigma);
  for (const Vec2& joint : pose.joints) {
    const double u = world_to_grid(joint[0]);  // column
    const double v = world_to_grid(joint[1]);  // row
    for (std::size_t row = 0; row < kRenderSize; ++row) {
      const double dv = static_cast<double>(row) - v;
      for (std::size_t col = 0; col < kRenderSize; ++col) {
        const double du = static_cast<double>(col) - u;
        const double value = std::exp(-(du * du + dv * dv) * inv_two_sigma_sq);
        double& cell = out.cells[row * kRenderSize + col];
        cell = std::max(cell, value);
      }
    }
  }
  return out;
}

}  // namespace handpose
