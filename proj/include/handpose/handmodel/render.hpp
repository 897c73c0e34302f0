#pragma once

#include <array>
#include <cstddef>

#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

inline constexpr std::size_t kRenderSize = 32;
inline constexpr std::size_t kRenderPixels = kRenderSize * kRenderSize;
/// World window mapped onto the grid: [-kRenderHalfWidth, kRenderHalfWidth] mm.
inline constexpr double kRenderHalfWidth = 120.0;
inline constexpr double kRenderCellPitch = 2.0 * kRenderHalfWidth / static_cast<double>(kRenderSize);
inline constexpr double kRenderBlobSigma = 1.5;  // in cells

/// 32x32 intensity grid in [0, 1], row-major, rows indexed by y.
struct Rendering {
  std::array<double, kRenderPixels> cells{};

  bool operator==(const Rendering&) const = default;
  double at(std::size_t row, std::size_t col) const { return cells[row * kRenderSize + col]; }
};

/// Grid coordinate of a world coordinate: cell i is centered at
/// -120 + i * pitch, so the window center falls on cell 16.
double world_to_grid(double mm);

/// Splats one isotropic Gaussian per joint; each cell takes the max over joints.
Rendering render(const Pose2D& pose);

}  // namespace handpose
