#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gclwarp/warping.hpp"

namespace gclwarp {

struct LossWeights {
  double reg = 0.1;          ///< 3D regularization (correspondence + flow)
  double l1_corr = 1.0;      ///< L1 on warped garments, stage 1
  double perc_corr = 0.2;    ///< perceptual on warped garments, stage 1
  double adv = 0.1;
  double l1_gen = 1.0;
  double perc_gen = 0.2;

  /// Throws std::invalid_argument unless every weight is finite and >= 0.
  void validate() const;
};

/// Frozen, randomly initialized convolution stack used as a deterministic
/// perceptual feature space. Parameters never require gradients.
class PerceptualExtractorImpl : public torch::nn::Module {
 public:
  explicit PerceptualExtractorImpl(std::uint64_t seed = 1234);

  /// Activations after each stage, input [B, 3, h, w].
  std::vector<torch::Tensor> forward(const torch::Tensor& image);

  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<torch::nn::Conv2d> stages_;
  std::uint64_t seed_;
};
TORCH_MODULE(PerceptualExtractor);

/// Sum over extractor stages of the mean absolute feature difference.
torch::Tensor perceptual_distance(const torch::Tensor& a, const torch::Tensor& b,
                                  PerceptualExtractor& extractor);

/// ||(M . (o_gt - o)) G||_1 averaged over rows with any support and over
/// channels. `garment_rows` is [B, N, C].
torch::Tensor loss_o(const CorrespondenceMatrix& o, const PseudoGt& gt,
                     const torch::Tensor& garment_rows);

/// Ground-truth flow at `level`, averaged over visible pixels only so the
/// fallback flows of occluded neighbours do not leak into visible cells.
/// Cells with no visible coverage get the plain resize.
torch::Tensor resize_visible_flow(const torch::Tensor& gt_flow, const torch::Tensor& visibility,
                                  const LevelGrid& grid, int level);

/// Sum over levels of the visibility-masked L1 flow error (|du| + |dv| per
/// pixel) averaged over visible pixels. The ground truth is resized with
/// resize_visible_flow and the visibility with resize_to_level.
torch::Tensor loss_f(const std::vector<FlowField>& flows, const torch::Tensor& gt_flow,
                     const torch::Tensor& visibility, const LevelGrid& grid);

/// Mean absolute difference over mask = 1 pixels and all channels; 0 for an
/// empty mask. `mask` is [B, 1, h, w].
torch::Tensor masked_l1_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                             const torch::Tensor& mask);

/// Named scalar terms plus their weighted total.
struct LossBreakdown {
  torch::Tensor total;
  std::map<std::string, torch::Tensor> terms;  ///< already weighted

  std::map<std::string, double> values() const;
};

/// Everything stage 1 needs from a batch, at full resolution.
struct Stage1Targets {
  torch::Tensor garment;     ///< [B, 3, H, W]
  torch::Tensor gt_flow;     ///< [B, 2, H, W]
  torch::Tensor visibility;  ///< [B, 1, H, W]
  torch::Tensor gt_warped;   ///< [B, 3, H, W]
};

struct Stage1LossOptions {
  LossWeights weights;
  bool mask_appearance_terms = false;  ///< restrict L1/perceptual to V_l
};

/// lambda_r (L_o + L_f) + lambda_l1 sum_l L1(warp(G_l, f_l), G_gt_l)
///   + lambda_perc sum_l perc(warp(G_l, f_l), G_gt_l).
/// `flows` holds f_0 ... f_L; `o` may be undefined (no correspondence term).
/// Terms: "reg_o", "reg_f", "l1", "perc".
LossBreakdown stage1_loss(const CorrespondenceMatrix& o, const std::vector<FlowField>& flows,
                          const Stage1Targets& targets, const LevelGrid& grid,
                          const Stage1LossOptions& options, PerceptualExtractor& extractor);

/// Non-saturating logistic GAN losses. The discriminator loss at logits
/// identically 0 for both real and fake is 2 ln 2.
torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_logits);
torch::Tensor discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits);

struct Stage2Losses {
  LossBreakdown generator;  ///< terms "adv", "l1", "perc"
  torch::Tensor discriminator;
};

/// `fake_logits_for_g` is D(generated) with gradients into the generator;
/// real/fake logits for the discriminator should come from detached inputs.
Stage2Losses stage2_losses(const torch::Tensor& generated, const torch::Tensor& target,
                           const torch::Tensor& fake_logits_for_g,
                           const torch::Tensor& real_logits, const torch::Tensor& fake_logits,
                           const LossWeights& weights, PerceptualExtractor& extractor);

}  // namespace gclwarp
