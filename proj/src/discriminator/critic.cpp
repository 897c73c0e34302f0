#include "handpose/discriminator/critic.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "handpose/autodiff/ops.hpp"
#include "handpose/graphnet/refinement.hpp"
#include "handpose/handmodel/render.hpp"

namespace handpose {

ad::Tensor kcs_bone_matrix(const Pose3D& pose, const SkeletonGraph& graph) {
  const auto flat = pose.flatten();
  ad::Tape tape;
  return kcs_bone_matrix(tape, ad::Tensor::from_values({kNumJoints, 3}, {flat.begin(), flat.end()}), graph);
}

ad::Tensor kcs_bone_matrix(ad::Tape& tape, const ad::Tensor& poses, const SkeletonGraph& graph) {
  return bone_matrix(tape, poses, graph);
}

SnLinear SnLinear::init(std::size_t in, std::size_t out, Rng& rng) {
  SnLinear layer{ad::Linear::init(in, out, rng), {}};
  layer.spectral = ad::SpectralNormState::init(in, out, rng);
  // Converge the singular-vector estimates before the first forward pass;
  // a random start can leave sigma far below its true value.
  ad::power_iterate(layer.linear.weight, layer.spectral, kSpectralWarmupIterations);
  return layer;
}

ad::Tensor SnLinear::effective_weight(ad::Tape& tape, bool update) {
  return ad::spectral_normalize(tape, linear.weight, spectral, update);
}

ad::Tensor SnLinear::forward(ad::Tape& tape, const ad::Tensor& x, bool update) {
  return linear.forward_with(tape, x, effective_weight(tape, update));
}

void Critic::collect(ad::NamedParams& out, const std::string& prefix) {
  for_each_layer([&](const std::string& name, SnLinear& layer) { layer.linear.collect(out, prefix + "." + name); });
}

std::size_t Critic::parameter_count() {
  std::size_t n = 0;
  for_each_layer([&](const std::string&, SnLinear& layer) { n += layer.linear.parameter_count(); });
  return n;
}

namespace {

/// Leading singular value by power iteration on WᵀW from a fixed start.
double converged_sigma(const ad::Tensor& w) {
  const std::size_t rows = w.rows(), cols = w.cols();
  std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols))), u(rows);
  double sigma = 0.0;
  for (int it = 0; it < 1000; ++it) {
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += w.at(r, c) * v[c];
      u[r] = s;
    }
    double next = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += w.at(r, c) * u[r];
      v[c] = s;
      next += s * s;
    }
    next = std::sqrt(next);
    if (next == 0.0) return 0.0;
    for (double& x : v) x /= next;
    const double estimate = std::sqrt(next);
    if (std::abs(estimate - sigma) <= 1e-13 * estimate) return estimate;
    sigma = estimate;
  }
  return sigma;
}

}  // namespace

std::vector<std::pair<std::string, double>> Critic::effective_sigmas() {
  std::vector<std::pair<std::string, double>> out;
  for_each_layer([&](const std::string& name, SnLinear& layer) {
    ad::Tape tape;
    out.emplace_back(name, converged_sigma(layer.effective_weight(tape, false)));
  });
  return out;
}

namespace {

void require_inputs(const ad::Tensor& images, const ad::Tensor& poses) {
  if (poses.rank() != 2 || poses.cols() != 3 || poses.rows() == 0 || poses.rows() % kNumJoints != 0) {
    throw std::invalid_argument("critic: poses must be [B*21 x 3], got " + ad::shape_string(poses.shape()));
  }
  if (images.rank() != 2 || images.rows() != poses.rows() / kNumJoints) {
    throw std::invalid_argument("critic: " + ad::shape_string(images.shape()) + " images for " +
                                std::to_string(poses.rows() / kNumJoints) + " poses");
  }
}

}  // namespace

MultiSourceCritic::MultiSourceCritic(const CriticOptions& options, Rng& rng, const SkeletonGraph& graph)
    : options_(options),
      graph_(&graph),
      node_mean_(ad::Tensor::filled({1, kNumJoints}, 1.0 / static_cast<double>(kNumJoints))),
      image1_(SnLinear::init(kRenderPixels, options.image_hidden, rng)),
      image2_(SnLinear::init(options.image_hidden, options.image_features, rng)),
      pose1_(SnLinear::init(3, options.pose_hidden, rng)),
      pose2_(SnLinear::init(options.pose_hidden, options.pose_features, rng)),
      bone_(SnLinear::init(options.bone_gram ? kNumBones * kNumBones : kNumBones * 3, options.bone_features, rng)),
      head1_(SnLinear::init(options.image_features + options.pose_features + options.bone_features,
                            options.head_hidden, rng)),
      head2_(SnLinear::init(options.head_hidden, 1, rng)) {}

ad::Tensor MultiSourceCritic::score(ad::Tape& tape, const ad::Tensor& images, const ad::Tensor& poses, bool update) {
  require_inputs(images, poses);
  if (images.cols() != image1_.linear.in_features()) {
    throw std::invalid_argument("critic: images must have " + std::to_string(image1_.linear.in_features()) +
                                " columns");
  }
  const std::size_t batch = images.rows();

  const ad::Tensor image = image2_.forward(tape, ad::relu(tape, image1_.forward(tape, images, update)), update);

  const ad::Tensor scaled = ad::scale(tape, poses, kCriticInputScale);
  const GcnLayer g1{pose1_.linear}, g2{pose2_.linear};
  ad::Tensor nodes = ad::relu(tape, g1.forward_with(tape, scaled, graph_->normalized, pose1_.effective_weight(tape, update)));
  nodes = ad::relu(tape, g2.forward_with(tape, nodes, graph_->normalized, pose2_.effective_weight(tape, update)));
  const ad::Tensor pose = ad::block_apply(tape, node_mean_, nodes);

  const ad::Tensor bones = kcs_bone_matrix(tape, scaled, *graph_);
  const ad::Tensor bone_input = options_.bone_gram ? ad::block_gram(tape, bones, kNumBones)
                                                   : ad::reshape(tape, bones, {batch, kNumBones * 3});
  const ad::Tensor bone = ad::relu(tape, bone_.forward(tape, bone_input, update));

  const ad::Tensor fused = ad::concat_cols(tape, ad::concat_cols(tape, image, pose), bone);
  return head2_.forward(tape, ad::relu(tape, head1_.forward(tape, fused, update)), update);
}

void MultiSourceCritic::for_each_layer(const LayerVisitor& visit) {
  visit("image.fc1", image1_);
  visit("image.fc2", image2_);
  visit("pose.gcn1", pose1_);
  visit("pose.gcn2", pose2_);
  visit("bone.fc", bone_);
  visit("head.fc1", head1_);
  visit("head.fc2", head2_);
}

SingleSourceCritic::SingleSourceCritic(std::size_t hidden, Rng& rng)
    : hidden_(SnLinear::init(kNumJoints * 3, hidden, rng)), output_(SnLinear::init(hidden, 1, rng)) {}

ad::Tensor SingleSourceCritic::score(ad::Tape& tape, const ad::Tensor& images, const ad::Tensor& poses, bool update) {
  require_inputs(images, poses);
  const ad::Tensor flat =
      ad::reshape(tape, ad::scale(tape, poses, kCriticInputScale), {poses.rows() / kNumJoints, kNumJoints * 3});
  return output_.forward(tape, ad::relu(tape, hidden_.forward(tape, flat, update)), update);
}

void SingleSourceCritic::for_each_layer(const LayerVisitor& visit) {
  visit("fc1", hidden_);
  visit("fc2", output_);
}

ad::Tensor critic_loss(ad::Tape& tape, const ad::Tensor& real_scores, const ad::Tensor& fake_scores) {
  if (real_scores.size() == 0 || fake_scores.size() == 0) throw std::invalid_argument("critic_loss: empty batch");
  return ad::sub(tape, ad::mean(tape, fake_scores), ad::mean(tape, real_scores));
}

namespace {

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) throw std::invalid_argument("critic_loss: empty batch");
  return mean_of(fake_scores) - mean_of(real_scores);
}

ad::Tensor generator_adversarial_loss(ad::Tape& tape, const ad::Tensor& fake_scores) {
  if (fake_scores.size() == 0) throw std::invalid_argument("generator_adversarial_loss: empty batch");
  return ad::scale(tape, ad::mean(tape, fake_scores), -1.0);
}

double generator_adversarial_loss(std::span<const double> fake_scores) {
  if (fake_scores.empty()) throw std::invalid_argument("generator_adversarial_loss: empty batch");
  return -mean_of(fake_scores);
}

}  // namespace handpose
