#pragma once

#include <torch/torch.h>

#include <vector>

#include "gclwarp/correspondence.hpp"
#include "gclwarp/warping.hpp"

namespace gclwarp {

/// Convolutional gated recurrent unit with 3x3 gates.
class ConvGruImpl : public torch::nn::Module {
 public:
  ConvGruImpl(int input_channels, int hidden_channels);

  struct Gates {
    torch::Tensor update;
    torch::Tensor reset;
  };

  /// One recurrent step. `gates`, when given, receives the sigmoid gate maps.
  torch::Tensor forward(const torch::Tensor& hidden, const torch::Tensor& input,
                        Gates* gates = nullptr);

  int hidden_channels() const { return hidden_; }

 private:
  torch::nn::Conv2d update_{nullptr}, reset_{nullptr}, candidate_{nullptr};
  int hidden_;
};
TORCH_MODULE(ConvGru);

struct RefineResult {
  FlowField flow;        ///< f_l
  FlowField upsampled;   ///< f_l^u
  torch::Tensor hidden;  ///< hidden state after the last iteration
};

/// Residual flow refinement at one pyramid level: the previous flow is
/// upsampled, the source features are warped by it, and a ConvGRU over
/// [warped source, target, upsampled flow] drives a 2-channel flow head.
class GacrmLevelImpl : public torch::nn::Module {
 public:
  GacrmLevelImpl(int feature_channels, int hidden_channels, int iterations = 1);

  /// `hidden` may be undefined (zeros) or from the coarser level, in which
  /// case it is bilinearly resized to this level.
  RefineResult forward(const torch::Tensor& x_l, const torch::Tensor& y_l,
                       const FlowField& f_prev, torch::Tensor hidden = {},
                       std::vector<ConvGru::Impl::Gates>* gates = nullptr);

  /// Zeroes the last flow-head convolution, making the level a pure upsampler.
  void zero_flow_head();

  ConvGru& gru() { return gru_; }

 private:
  ConvGru gru_{nullptr};
  torch::nn::Conv2d head_hidden_{nullptr}, head_out_{nullptr};
  int iterations_;
};
TORCH_MODULE(GacrmLevel);

/// One refinement unit per pyramid level 1..L.
class GacrmImpl : public torch::nn::Module {
 public:
  /// `feature_channels[l - 1]` is the channel count of pyramid level l.
  GacrmImpl(const std::vector<int>& feature_channels, int hidden_channels, int iterations = 1);

  /// Returns [f_1 ... f_L]; hidden state is threaded from coarse to fine.
  std::vector<FlowField> forward(const FeaturePyramid& src, const FeaturePyramid& tgt,
                                 const FlowField& f0);

  GacrmLevel& level(int l) { return levels_.at(l - 1); }
  int depth() const { return static_cast<int>(levels_.size()); }

 private:
  std::vector<GacrmLevel> levels_;
};
TORCH_MODULE(Gacrm);

}  // namespace gclwarp
