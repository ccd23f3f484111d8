#include "gclwarp/gacrm.hpp"

#include <stdexcept>
#include <string>

namespace gclwarp {

namespace F = torch::nn::functional;

namespace {

// Flow displacements enter the recurrent input at this scale.
constexpr double kFlowInputScale = 0.1;

torch::nn::Conv2d conv3x3(int in, int out) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1));
}

}  // namespace

ConvGruImpl::ConvGruImpl(int input_channels, int hidden_channels) : hidden_(hidden_channels) {
  update_ = register_module("update", conv3x3(input_channels + hidden_channels, hidden_channels));
  reset_ = register_module("reset", conv3x3(input_channels + hidden_channels, hidden_channels));
  candidate_ =
      register_module("candidate", conv3x3(input_channels + hidden_channels, hidden_channels));
}

torch::Tensor ConvGruImpl::forward(const torch::Tensor& hidden, const torch::Tensor& input,
                                   Gates* gates) {
  const auto hx = torch::cat({hidden, input}, 1);
  const auto z = torch::sigmoid(update_(hx));
  const auto r = torch::sigmoid(reset_(hx));
  const auto q = torch::tanh(candidate_(torch::cat({r * hidden, input}, 1)));
  if (gates) *gates = {z, r};
  return (1 - z) * hidden + z * q;
}

GacrmLevelImpl::GacrmLevelImpl(int feature_channels, int hidden_channels, int iterations)
    : iterations_(iterations) {
  if (iterations < 1) throw std::invalid_argument("GacrmLevel: iterations must be >= 1");
  gru_ = register_module("gru", ConvGru(2 * feature_channels + 2, hidden_channels));
  head_hidden_ = register_module("head_hidden", conv3x3(hidden_channels, 32));
  head_out_ = register_module("head_out", conv3x3(32, 2));
  torch::NoGradGuard no_grad;
  head_out_->weight.mul_(0.1);
  head_out_->bias.zero_();
}

void GacrmLevelImpl::zero_flow_head() {
  torch::NoGradGuard no_grad;
  head_out_->weight.zero_();
  head_out_->bias.zero_();
}

RefineResult GacrmLevelImpl::forward(const torch::Tensor& x_l, const torch::Tensor& y_l,
                                     const FlowField& f_prev, torch::Tensor hidden,
                                     std::vector<ConvGru::Impl::Gates>* gates) {
  TORCH_CHECK(x_l.sizes() == y_l.sizes(), "GacrmLevel: source ", x_l.sizes(),
              " and target ", y_l.sizes(), " features differ");
  if (f_prev.height() * 2 != x_l.size(2) || f_prev.width() * 2 != x_l.size(3))
    throw std::invalid_argument("GacrmLevel: flow at " + std::to_string(f_prev.height()) + "x" +
                                std::to_string(f_prev.width()) +
                                " is not one level below features at " +
                                std::to_string(x_l.size(2)) + "x" + std::to_string(x_l.size(3)));
  const FlowField up = upsample_flow(f_prev);
  const int hidden_channels = gru_->hidden_channels();
  if (!hidden.defined()) {
    hidden = torch::zeros({x_l.size(0), hidden_channels, x_l.size(2), x_l.size(3)}, x_l.options());
  } else if (hidden.size(2) != x_l.size(2) || hidden.size(3) != x_l.size(3)) {
    hidden = resize_field(hidden, FieldKind::image, x_l.size(2), x_l.size(3));
  }
  torch::Tensor flow = up.uv;
  for (int it = 0; it < iterations_; ++it) {
    const auto input = torch::cat({bilinear_warp(x_l, flow), y_l, flow * kFlowInputScale}, 1);
    ConvGru::Impl::Gates g;
    hidden = gru_(hidden, input, gates ? &g : nullptr);
    if (gates) gates->push_back(g);
    const auto residual = head_out_(
        F::leaky_relu(head_hidden_(hidden), F::LeakyReLUFuncOptions().negative_slope(0.2)));
    flow = flow + residual;
  }
  return {{flow, up.level}, up, hidden};
}

GacrmImpl::GacrmImpl(const std::vector<int>& feature_channels, int hidden_channels,
                     int iterations) {
  for (std::size_t i = 0; i < feature_channels.size(); ++i)
    levels_.push_back(register_module("level" + std::to_string(i + 1),
                                      GacrmLevel(feature_channels[i], hidden_channels, iterations)));
}

std::vector<FlowField> GacrmImpl::forward(const FeaturePyramid& src, const FeaturePyramid& tgt,
                                          const FlowField& f0) {
  if (src.depth() != depth() || tgt.depth() != depth())
    throw std::invalid_argument("Gacrm: pyramids must have " + std::to_string(depth() + 1) +
                                " levels");
  std::vector<FlowField> flows;
  FlowField prev = f0;
  torch::Tensor hidden;
  for (int l = 1; l <= depth(); ++l) {
    auto r = levels_[l - 1](src[l], tgt[l], prev, hidden);
    hidden = r.hidden;
    prev = r.flow;
    flows.push_back(r.flow);
  }
  return flows;
}

}  // namespace gclwarp
