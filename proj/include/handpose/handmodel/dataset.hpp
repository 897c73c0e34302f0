#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "handpose/handmodel/render.hpp"
#include "handpose/handmodel/skeleton.hpp"

namespace handpose {

struct Sample {
  Rendering rendering;
  Pose3D gt_pose3d;
  Pose2D gt_pose2d;
  HandParams gt_params;

  bool operator==(const Sample&) const = default;
};

/// Sampling ranges of the synthetic generator.
struct SamplingRanges {
  double flexion_min = -0.5;
  double flexion_max = 1.8;
  double abduction_limit = 0.35;
  double beta_min = 0.7;
  double beta_max = 1.3;
  double rotation_angle_max = 1.5707963267948966;  // pi / 2
  double translation_limit = 20.0;
  double scale_min = 0.8;
  double scale_max = 1.2;
};

/// Draws one parameter set; uniform within `ranges`, rotation axis uniform
/// on the sphere.
HandParams sample_params(std::uint64_t seed, const SamplingRanges& ranges = {});

/// Builds a sample from parameters: forward model, projection, rendering.
Sample make_sample(const HandParams& params);

/// n samples; sample i depends only on (seed, i), so any index range can be
/// generated independently.
std::vector<Sample> sample_synthetic(std::uint64_t seed, std::size_t n, const SamplingRanges& ranges = {});

/// JSON Lines, one sample per line with fields rendering (1024), pose3d (63),
/// pose2d (42), params (33). Numbers use shortest round-trip formatting.
void write_dataset(std::ostream& out, const std::vector<Sample>& samples);
void save_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples);
/// Throws std::runtime_error naming the offending line on malformed input.
std::vector<Sample> read_dataset(std::istream& in);
std::vector<Sample> load_dataset(const std::filesystem::path& path);

}  // namespace handpose
