#include "handpose/graphnet/refinement.hpp"

#include <cmath>
#include <stdexcept>

#include "handpose/autodiff/ops.hpp"

namespace handpose {

namespace {

const ad::Tensor& node_broadcast() {
  static const ad::Tensor kOnes = ad::Tensor::filled({kNumJoints, 1}, 1.0);
  return kOnes;
}

}  // namespace

ad::Tensor GcnLayer::forward(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& propagation) const {
  return forward_with(tape, x, propagation, linear.weight);
}

ad::Tensor GcnLayer::forward_with(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& propagation,
                                  const ad::Tensor& effective_weight) const {
  const ad::Tensor mixed = ad::block_apply(tape, propagation, ad::matmul(tape, x, effective_weight));
  return ad::add(tape, mixed, linear.bias);
}

LayerNorm LayerNorm::init(std::size_t dim) {
  return {ad::Tensor::filled({dim}, 1.0, true), ad::Tensor::zeros({dim}, true)};
}

ad::Tensor LayerNorm::forward(ad::Tape& tape, const ad::Tensor& x) const {
  return ad::layer_normalize(tape, x, gain, bias);
}

void LayerNorm::collect(ad::NamedParams& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".gain", gain);
  out.emplace_back(prefix + ".bias", bias);
}

GraphResBlock GraphResBlock::init(std::size_t dim, Rng& rng) {
  GraphResBlock b;
  b.first = GcnLayer::init(dim, dim, rng);
  b.first_norm = LayerNorm::init(dim);
  b.second = GcnLayer::init(dim, dim, rng);
  b.second_norm = LayerNorm::init(dim);
  b.skip = GcnLayer::init(dim, dim, rng);
  return b;
}

ad::Tensor GraphResBlock::forward(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& propagation) const {
  if (x.rank() != 2 || x.cols() != dim()) {
    throw std::invalid_argument("GraphResBlock: expected feature dim " + std::to_string(dim()) + ", got " +
                                ad::shape_string(x.shape()));
  }
  ad::Tensor main = first_norm.forward(tape, first.forward(tape, x, propagation));
  main = second_norm.forward(tape, second.forward(tape, main, propagation));
  return ad::add(tape, main, skip.forward(tape, x, propagation));
}

void GraphResBlock::collect(ad::NamedParams& out, const std::string& prefix) const {
  first.collect(out, prefix + ".gcn1");
  first_norm.collect(out, prefix + ".norm1");
  second.collect(out, prefix + ".gcn2");
  second_norm.collect(out, prefix + ".norm2");
  skip.collect(out, prefix + ".skip");
}

std::size_t Refiner::parameter_count() const {
  ad::NamedParams params;
  collect(params, "");
  std::size_t total = 0;
  for (const auto& [name, t] : params) total += t.size();
  return total;
}

ad::Tensor refinement_input(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature) {
  if (prior.rank() != 2 || prior.cols() != 3 || prior.rows() % kNumJoints != 0) {
    throw std::invalid_argument("refinement: prior must be [B*21 x 3], got " + ad::shape_string(prior.shape()));
  }
  if (feature.rank() != 2 || feature.rows() * kNumJoints != prior.rows()) {
    throw std::invalid_argument("refinement: feature batch " + ad::shape_string(feature.shape()) +
                                " does not match prior " + ad::shape_string(prior.shape()));
  }
  const ad::Tensor per_node = ad::block_apply(tape, node_broadcast(), feature);
  return ad::concat_cols(tape, ad::scale(tape, prior, kRefinementInputScale), per_node);
}

GcnRefiner::GcnRefiner(const GcnRefinerOptions& options, Rng& rng, const SkeletonGraph& graph)
    : options_(options), graph_(&graph) {
  if (options.hidden_dim < 2 || options.feature_dim == 0) {
    throw std::invalid_argument("GcnRefiner: hidden_dim must be >= 2 and feature_dim positive");
  }
  input_ = GcnLayer::init(3 + options.feature_dim, options.hidden_dim, rng);
  for (std::size_t i = 0; i < options.res_blocks; ++i) blocks_.push_back(GraphResBlock::init(options.hidden_dim, rng));
  output_ = GcnLayer::zeros(options.hidden_dim, 3);
}

ad::Tensor GcnRefiner::deformation(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature) const {
  const ad::Tensor& propagation = graph_->normalized;
  ad::Tensor x = input_.forward(tape, refinement_input(tape, prior, feature), propagation);
  for (const GraphResBlock& block : blocks_) {
    x = block.forward(tape, x, propagation);
    if (options_.relu_between_blocks) x = ad::relu(tape, x);
  }
  return output_.forward(tape, x, propagation);
}

void GcnRefiner::collect(ad::NamedParams& out, const std::string& prefix) const {
  input_.collect(out, prefix + ".input");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, prefix + ".block" + std::to_string(i));
  output_.collect(out, prefix + ".output");
}

FcRefiner::FcRefiner(std::size_t feature_dim, std::size_t hidden_dim, Rng& rng) {
  const std::size_t in = kNumJoints * (3 + feature_dim);
  hidden_ = ad::Linear::init(in, hidden_dim, rng);
  output_ = ad::Linear::zeros(hidden_dim, kNumJoints * 3);
}

std::size_t FcRefiner::hidden_for_budget(std::size_t feature_dim, std::size_t budget) {
  // params(h) = in*h + h + h*63 + 63
  const double in = static_cast<double>(kNumJoints * (3 + feature_dim));
  const double out = static_cast<double>(kNumJoints * 3);
  const double h = (static_cast<double>(budget) - out) / (in + 1.0 + out);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(h)));
}

ad::Tensor FcRefiner::deformation(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature) const {
  const ad::Tensor nodes = refinement_input(tape, prior, feature);
  const std::size_t batch = feature.rows();
  const ad::Tensor flat = ad::reshape(tape, nodes, {batch, nodes.size() / batch});
  const ad::Tensor out = output_.forward(tape, ad::relu(tape, hidden_.forward(tape, flat)));
  return ad::reshape(tape, out, {batch * kNumJoints, 3});
}

void FcRefiner::collect(ad::NamedParams& out, const std::string& prefix) const {
  hidden_.collect(out, prefix + ".hidden");
  output_.collect(out, prefix + ".output");
}

ad::Tensor refine(ad::Tape& tape, const ad::Tensor& prior, const ad::Tensor& feature, const Refiner& refiner) {
  return ad::add(tape, prior, refiner.deformation(tape, prior, feature));
}

Pose3D refine(const Pose3D& prior, std::span<const double> feature, const Refiner& refiner) {
  ad::Tape tape;
  const auto flat = prior.flatten();
  const ad::Tensor p = ad::Tensor::from_values({kNumJoints, 3}, {flat.begin(), flat.end()});
  const ad::Tensor f = ad::Tensor::from_values({1, feature.size()}, {feature.begin(), feature.end()});
  return Pose3D::from_flat(refine(tape, p, f, refiner).values());
}

}  // namespace handpose
