#include "gclwarp/generator.hpp"

#include <stdexcept>
#include <string>

#include "gclwarp/warping.hpp"

namespace gclwarp {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv(int in, int out, int k = 3, int stride = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2));
}

torch::Tensor lrelu(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
}

}  // namespace

SpadeBlockImpl::SpadeBlockImpl(int channels, int condition_channels, int hidden)
    : channels_(channels) {
  shared_ = register_module("shared", conv(condition_channels, hidden));
  gamma_ = register_module("gamma", conv(hidden, channels));
  beta_ = register_module("beta", conv(hidden, channels));
  // Start close to plain instance normalization: gamma ~ 1, beta ~ 0.
  torch::NoGradGuard no_grad;
  gamma_->weight.mul_(0.1);
  gamma_->bias.fill_(1.0);
  beta_->weight.mul_(0.1);
  beta_->bias.zero_();
}

std::pair<torch::Tensor, torch::Tensor> SpadeBlockImpl::modulation(const torch::Tensor& condition) {
  const auto h = torch::relu(shared_(condition));
  return {gamma_(h), beta_(h)};
}

torch::Tensor SpadeBlockImpl::forward(const torch::Tensor& features, const torch::Tensor& condition) {
  TORCH_CHECK(features.dim() == 4 && features.size(1) == channels_, "SpadeBlock: expected [B, ",
              channels_, ", h, w] features, got ", features.sizes());
  TORCH_CHECK(condition.dim() == 4 && condition.size(0) == features.size(0),
              "SpadeBlock: condition ", condition.sizes(), " does not match features ",
              features.sizes());
  const auto cond = resize_field(condition, FieldKind::image, features.size(2), features.size(3));
  const auto normalized =
      F::instance_norm(features, F::InstanceNormFuncOptions().eps(1e-5));
  const auto [g, b] = modulation(cond);
  return g * normalized + b;
}

TryOnGeneratorImpl::TryOnGeneratorImpl(std::vector<int> widths) {
  if (widths.size() != 3) throw std::invalid_argument("TryOnGenerator: expected three widths");
  const int w0 = widths[0], w1 = widths[1], w2 = widths[2];
  enc_.push_back(register_module("enc0", conv(6, w0)));
  enc_.push_back(register_module("enc1", conv(w0, w1, 3, 2)));
  enc_.push_back(register_module("enc2", conv(w1, w2, 3, 2)));
  enc_.push_back(register_module("enc3", conv(w2, w2, 3, 2)));
  const std::vector<std::pair<int, int>> dec_shapes{{w2 + w2, w2}, {w2 + w1, w1}, {w1 + w0, w0}};
  for (std::size_t i = 0; i < dec_shapes.size(); ++i) {
    dec_.push_back(register_module("dec" + std::to_string(i),
                                   conv(dec_shapes[i].first, dec_shapes[i].second)));
    spade_.push_back(register_module("spade" + std::to_string(i), SpadeBlock(dec_shapes[i].second)));
  }
  out_ = register_module("out", conv(w0, 3));
}

torch::Tensor TryOnGeneratorImpl::forward(const torch::Tensor& agnostic,
                                          const torch::Tensor& warped_garment) {
  TORCH_CHECK(agnostic.sizes() == warped_garment.sizes() && agnostic.dim() == 4 &&
                  agnostic.size(1) == 3,
              "TryOnGenerator: agnostic ", agnostic.sizes(), " and garment ",
              warped_garment.sizes(), " must both be [B,3,H,W]");
  if (agnostic.size(2) % 8 != 0 || agnostic.size(3) % 8 != 0)
    throw std::invalid_argument("TryOnGenerator: size must be divisible by 8");
  std::vector<torch::Tensor> skips;
  auto h = torch::cat({agnostic, warped_garment}, 1);
  for (auto& c : enc_) {
    h = lrelu(c(h));
    skips.push_back(h);
  }
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const auto& skip = skips[skips.size() - 2 - i];
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .size(std::vector<std::int64_t>{skip.size(2), skip.size(3)})
                              .mode(torch::kBilinear)
                              .align_corners(false));
    h = lrelu(spade_[i](dec_[i](torch::cat({h, skip}, 1)), warped_garment));
  }
  return torch::sigmoid(out_(h));
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int width) {
  c1_ = register_module("c1", torch::nn::Conv2d(torch::nn::Conv2dOptions(6, width, 4).stride(2).padding(1)));
  c2_ = register_module("c2",
                        torch::nn::Conv2d(torch::nn::Conv2dOptions(width, 2 * width, 4).stride(2).padding(1)));
  c3_ = register_module("c3", conv(2 * width, 1));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& image, const torch::Tensor& condition) {
  TORCH_CHECK(image.sizes() == condition.sizes(), "PatchDiscriminator: image ", image.sizes(),
              " and condition ", condition.sizes(), " differ");
  return c3_(lrelu(c2_(lrelu(c1_(torch::cat({image, condition}, 1))))));
}

torch::Tensor make_agnostic(const torch::Tensor& target_image, const torch::Tensor& garment_mask) {
  return target_image * (1 - garment_mask);
}

}  // namespace gclwarp
