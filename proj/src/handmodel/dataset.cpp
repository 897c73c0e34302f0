#include "handpose/handmodel/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "handpose/autodiff/random.hpp"
#include "handpose/handmodel/kinematics.hpp"

namespace handpose {

namespace {

using nlohmann::json;

template <std::size_t N>
std::vector<double> as_vector(const std::array<double, N>& a) {
  return {a.begin(), a.end()};
}

std::vector<double> read_array(const json& record, const char* key, std::size_t expected, std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end() || !it->is_array()) {
    throw std::runtime_error("dataset line " + std::to_string(line) + ": missing array '" + key + "'");
  }
  if (it->size() != expected) {
    throw std::runtime_error("dataset line " + std::to_string(line) + ": '" + key + "' has " +
                             std::to_string(it->size()) + " entries, expected " + std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : *it) {
    if (!v.is_number()) {
      throw std::runtime_error("dataset line " + std::to_string(line) + ": non-numeric entry in '" + key + "'");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

HandParams sample_params(std::uint64_t seed, const SamplingRanges& ranges) {
  Rng rng(seed);
  HandParams p;
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    p.theta[4 * f + 0] = rng.uniform(ranges.flexion_min, ranges.flexion_max);
    p.theta[4 * f + 1] = rng.uniform(-ranges.abduction_limit, ranges.abduction_limit);
    p.theta[4 * f + 2] = rng.uniform(ranges.flexion_min, ranges.flexion_max);
    p.theta[4 * f + 3] = rng.uniform(ranges.flexion_min, ranges.flexion_max);
  }
  for (double& b : p.beta) b = rng.uniform(ranges.beta_min, ranges.beta_max);
  // Uniform axis on the sphere via (z, azimuth).
  const double z = rng.uniform(-1.0, 1.0);
  const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double radial = std::sqrt(1.0 - z * z);
  const double angle = rng.uniform(0.0, ranges.rotation_angle_max);
  p.cam_rotation = {angle * radial * std::cos(azimuth), angle * radial * std::sin(azimuth), angle * z};
  for (double& t : p.cam_translation) t = rng.uniform(-ranges.translation_limit, ranges.translation_limit);
  p.cam_scale = rng.uniform(ranges.scale_min, ranges.scale_max);
  return p;
}

Sample make_sample(const HandParams& params) {
  Sample s;
  s.gt_params = params;
  s.gt_pose3d = hand_model_pose(params);
  s.gt_pose2d = project_2d(s.gt_pose3d);
  s.rendering = render(s.gt_pose2d);
  return s;
}

std::vector<Sample> sample_synthetic(std::uint64_t seed, std::size_t n, const SamplingRanges& ranges) {
  if (n == 0) throw std::invalid_argument("sample_synthetic: n must be at least 1");
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_sample(sample_params(derive_seed(seed, "sample", i), ranges)));
  return out;
}

void write_dataset(std::ostream& out, const std::vector<Sample>& samples) {
  for (const Sample& s : samples) {
    json record;
    record["rendering"] = as_vector(s.rendering.cells);
    record["pose3d"] = as_vector(s.gt_pose3d.flatten());
    record["pose2d"] = as_vector(s.gt_pose2d.flatten());
    record["params"] = as_vector(s.gt_params.to_vector());
    out << record.dump() << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_dataset(out, samples);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<Sample> read_dataset(std::istream& in) {
  std::vector<Sample> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("dataset line " + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    Sample s;
    const auto cells = read_array(record, "rendering", kRenderPixels, line);
    std::copy(cells.begin(), cells.end(), s.rendering.cells.begin());
    s.gt_pose3d = Pose3D::from_flat(read_array(record, "pose3d", kNumJoints * 3, line));
    const auto p2 = read_array(record, "pose2d", kNumJoints * 2, line);
    for (std::size_t j = 0; j < kNumJoints; ++j) s.gt_pose2d.joints[j] = {p2[2 * j], p2[2 * j + 1]};
    s.gt_params = HandParams::from_vector(read_array(record, "params", kNumParams, line));
    out.push_back(s);
  }
  return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

}  // namespace handpose
