#include "handpose/handmodel/encoder.hpp"

#include <stdexcept>
#include <vector>

#include "handpose/autodiff/ops.hpp"

namespace handpose {

Encoder Encoder::init(std::size_t out_dim, Rng& rng, std::size_t hidden_dim) {
  Encoder e;
  e.hidden = ad::Linear::init(kRenderPixels, hidden_dim, rng);
  e.output = ad::Linear::init(hidden_dim, out_dim, rng);
  return e;
}

ad::Tensor Encoder::forward(ad::Tape& tape, const ad::Tensor& renderings) const {
  return output.forward(tape, ad::relu(tape, hidden.forward(tape, renderings)));
}

void Encoder::collect(ad::NamedParams& out, const std::string& prefix) const {
  hidden.collect(out, prefix + ".hidden");
  output.collect(out, prefix + ".output");
}

ParamDecoder ParamDecoder::init(Rng& rng, std::size_t latent_dim) {
  return ParamDecoder{ad::Linear::init(latent_dim, kNumParams, rng)};
}

ad::Tensor ParamDecoder::forward(ad::Tape& tape, const ad::Tensor& latent) const {
  const ad::Tensor raw = linear.forward(tape, latent);
  const ad::Tensor theta = ad::slice_cols(tape, raw, 0, 20);
  const ad::Tensor beta = ad::add_scalar(tape, ad::scale(tape, ad::tanh(tape, ad::slice_cols(tape, raw, 20, 26)), 0.3), 1.0);
  const ad::Tensor camera_rt = ad::slice_cols(tape, raw, 26, 32);
  const ad::Tensor camera_scale = ad::exp(tape, ad::slice_cols(tape, raw, 32, 33));
  return ad::concat_cols(tape, ad::concat_cols(tape, ad::concat_cols(tape, theta, beta), camera_rt), camera_scale);
}

void ParamDecoder::collect(ad::NamedParams& out, const std::string& prefix) const {
  linear.collect(out, prefix + ".linear");
}

HandParams decode_params(std::span<const double> latent, const ParamDecoder& decoder) {
  ad::Tape tape;
  const ad::Tensor z = ad::Tensor::from_values({1, latent.size()}, {latent.begin(), latent.end()});
  const ad::Tensor decoded = decoder.forward(tape, z.detach());
  return HandParams::from_vector(decoded.values());
}

ad::Tensor stack_renderings(std::span<const Rendering* const> renderings) {
  if (renderings.empty()) throw std::invalid_argument("stack_renderings: empty batch");
  std::vector<double> values;
  values.reserve(renderings.size() * kRenderPixels);
  for (const Rendering* r : renderings) values.insert(values.end(), r->cells.begin(), r->cells.end());
  return ad::Tensor::from_values({renderings.size(), kRenderPixels}, std::move(values));
}

}  // namespace handpose
