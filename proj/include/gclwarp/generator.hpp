#pragma once

#include <torch/torch.h>

#include <vector>

namespace gclwarp {

/// Spatially-adaptive normalization: instance-normalized features modulated
/// per pixel by gamma(condition) and beta(condition).
class SpadeBlockImpl : public torch::nn::Module {
 public:
  SpadeBlockImpl(int channels, int condition_channels = 3, int hidden = 32);

  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& condition);

  /// Modulation maps for a condition already at the feature resolution.
  std::pair<torch::Tensor, torch::Tensor> modulation(const torch::Tensor& condition);

  torch::nn::Conv2d& shared() { return shared_; }
  torch::nn::Conv2d& gamma() { return gamma_; }
  torch::nn::Conv2d& beta() { return beta_; }

 private:
  torch::nn::Conv2d shared_{nullptr}, gamma_{nullptr}, beta_{nullptr};
  int channels_;
};
TORCH_MODULE(SpadeBlock);

/// U-shaped conditional generator: three stride-2 encoder blocks, three
/// upsampling decoder blocks with skip connections and SPADE conditioned on
/// the warped garment, sigmoid output.
class TryOnGeneratorImpl : public torch::nn::Module {
 public:
  explicit TryOnGeneratorImpl(std::vector<int> widths = {32, 64, 128});

  /// agnostic: target person with the garment region zeroed [B, 3, H, W];
  /// warped_garment: G' at full resolution [B, 3, H, W]. H, W divisible by 8.
  torch::Tensor forward(const torch::Tensor& agnostic, const torch::Tensor& warped_garment);

 private:
  std::vector<torch::nn::Conv2d> enc_;
  std::vector<torch::nn::Conv2d> dec_;
  std::vector<SpadeBlock> spade_;
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(TryOnGenerator);

/// Conditional patch discriminator; the logit map has size input / 4.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(int width = 32);

  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& condition);

  static constexpr int kDownsamplingBlocks = 2;

 private:
  torch::nn::Conv2d c1_{nullptr}, c2_{nullptr}, c3_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// Zeroes the garment region of a target image: image * (1 - mask).
torch::Tensor make_agnostic(const torch::Tensor& target_image, const torch::Tensor& garment_mask);

}  // namespace gclwarp
