#include "gclwarp/losses.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <stdexcept>

namespace gclwarp {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  for (double w : {reg, l1_corr, perc_corr, adv, l1_gen, perc_gen})
    if (!std::isfinite(w) || w < 0)
      throw std::invalid_argument("LossWeights: weights must be finite and non-negative");
}

PerceptualExtractorImpl::PerceptualExtractorImpl(std::uint64_t seed) : seed_(seed) {
  const std::vector<std::pair<int, int>> shapes{{3, 16}, {16, 32}, {32, 32}};
  const std::vector<int> strides{1, 2, 2};
  for (std::size_t i = 0; i < shapes.size(); ++i)
    stages_.push_back(register_module(
        "stage" + std::to_string(i),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(shapes[i].first, shapes[i].second, 3)
                              .stride(strides[i])
                              .padding(1))));
  // Own generator so construction never touches the global RNG.
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  for (auto& conv : stages_) {
    const double fan_in = static_cast<double>(conv->weight.numel() / conv->weight.size(0));
    conv->weight.copy_(torch::randn(conv->weight.sizes(), gen, torch::kFloat) /
                       std::sqrt(fan_in));
    conv->bias.zero_();
  }
  for (auto& p : parameters()) p.set_requires_grad(false);
}

std::vector<torch::Tensor> PerceptualExtractorImpl::forward(const torch::Tensor& image) {
  TORCH_CHECK(image.dim() == 4 && image.size(1) == 3, "PerceptualExtractor: expected [B,3,h,w]");
  std::vector<torch::Tensor> feats;
  auto h = image;
  for (auto& conv : stages_) {
    h = F::leaky_relu(conv(h), F::LeakyReLUFuncOptions().negative_slope(0.2));
    feats.push_back(h);
  }
  return feats;
}

torch::Tensor perceptual_distance(const torch::Tensor& a, const torch::Tensor& b,
                                  PerceptualExtractor& extractor) {
  TORCH_CHECK(a.sizes() == b.sizes(), "perceptual_distance: shapes ", a.sizes(), " and ",
              b.sizes(), " differ");
  const auto fa = extractor(a);
  const auto fb = extractor(b);
  auto total = torch::zeros({}, a.options());
  for (std::size_t i = 0; i < fa.size(); ++i) total = total + (fa[i] - fb[i]).abs().mean();
  return total;
}

torch::Tensor loss_o(const CorrespondenceMatrix& o, const PseudoGt& gt,
                     const torch::Tensor& garment_rows) {
  const auto& w = o.weights;
  TORCH_CHECK(w.sizes() == gt.correspondence.weights.sizes() && w.sizes() == gt.mask.sizes(),
              "loss_o: correspondence shapes differ");
  TORCH_CHECK(garment_rows.dim() == 3 && garment_rows.size(0) == w.size(0) &&
                  garment_rows.size(1) == w.size(2),
              "loss_o: garment rows ", garment_rows.sizes(), " do not match ", w.sizes());
  const auto diff = gt.mask * (gt.correspondence.weights - w);
  const auto per_row = torch::bmm(diff, garment_rows).abs();  // [B, N, C]
  const auto valid = gt.valid_rows.to(w.dtype()).unsqueeze(-1);
  const auto count = valid.sum() * garment_rows.size(2);
  if (count.item<double>() == 0) return (per_row * 0).sum();
  return (per_row * valid).sum() / count;
}

torch::Tensor masked_l1_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                             const torch::Tensor& mask) {
  TORCH_CHECK(pred.sizes() == gt.sizes(), "masked_l1_loss: shapes ", pred.sizes(), " and ",
              gt.sizes(), " differ");
  TORCH_CHECK(mask.dim() == 4 && mask.size(1) == 1, "masked_l1_loss: mask must be [B,1,h,w]");
  const auto count = mask.sum() * pred.size(1);
  const auto err = ((pred - gt).abs() * mask).sum();
  if (count.item<double>() == 0) return err * 0;
  return err / count;
}

torch::Tensor resize_visible_flow(const torch::Tensor& gt_flow, const torch::Tensor& visibility,
                                  const LevelGrid& grid, int level) {
  const auto plain = resize_to_level(gt_flow, FieldKind::flow, grid, level);
  const auto weighted = resize_to_level(gt_flow * visibility, FieldKind::flow, grid, level);
  const auto coverage = resize_to_level(visibility, FieldKind::image, grid, level);
  const auto covered = coverage > 1e-6;
  return torch::where(covered, weighted / torch::where(covered, coverage, torch::ones_like(coverage)), plain);
}

torch::Tensor loss_f(const std::vector<FlowField>& flows, const torch::Tensor& gt_flow,
                     const torch::Tensor& visibility, const LevelGrid& grid) {
  if (flows.empty()) throw std::invalid_argument("loss_f: no flows given");
  auto total = torch::zeros({}, flows.front().uv.options());
  for (const auto& f : flows) {
    const auto gt = resize_visible_flow(gt_flow, visibility, grid, f.level);
    const auto vis = resize_to_level(visibility, FieldKind::mask, grid, f.level);
    TORCH_CHECK(gt.sizes() == f.uv.sizes(), "loss_f: flow at level ", f.level, " has shape ",
                f.uv.sizes(), ", expected ", gt.sizes());
    const auto count = vis.sum();
    if (count.item<double>() == 0) continue;
    total = total + ((gt - f.uv).abs() * vis).sum() / count;
  }
  return total;
}

std::map<std::string, double> LossBreakdown::values() const {
  std::map<std::string, double> out;
  for (const auto& [k, v] : terms) out[k] = v.item<double>();
  out["total"] = total.item<double>();
  return out;
}

LossBreakdown stage1_loss(const CorrespondenceMatrix& o, const std::vector<FlowField>& flows,
                          const Stage1Targets& t, const LevelGrid& grid,
                          const Stage1LossOptions& options, PerceptualExtractor& extractor) {
  if (flows.empty()) throw std::invalid_argument("stage1_loss: no flows given");
  const auto& w = options.weights;
  const auto opts = flows.front().uv.options();
  auto zero = torch::zeros({}, opts);
  LossBreakdown out;

  // Correspondence term at the base grid.
  torch::Tensor reg_o = zero;
  if (o.weights.defined() && w.reg > 0) {
    const auto base_gt = resize_visible_flow(t.gt_flow, t.visibility, grid, 0);
    const auto pseudo = scatter_pseudo_gt({base_gt, 0});
    const auto g_base = resize_to_level(t.garment, FieldKind::image, grid, 0);
    const auto rows = g_base.reshape({g_base.size(0), g_base.size(1), -1}).transpose(1, 2);
    reg_o = loss_o(o, pseudo, rows);
  }
  torch::Tensor reg_f = zero;
  if (flows.size() > 1 && w.reg > 0)
    reg_f = loss_f({flows.begin() + 1, flows.end()}, t.gt_flow, t.visibility, grid);

  torch::Tensor l1 = zero, perc = zero;
  for (const auto& f : flows) {
    const auto g_l = resize_to_level(t.garment, FieldKind::image, grid, f.level);
    const auto gt_l = resize_to_level(t.gt_warped, FieldKind::image, grid, f.level);
    const auto warped = bilinear_warp(g_l, f);
    if (options.mask_appearance_terms) {
      const auto vis = resize_to_level(t.visibility, FieldKind::mask, grid, f.level);
      if (w.l1_corr > 0) l1 = l1 + masked_l1_loss(warped, gt_l, vis);
      if (w.perc_corr > 0) perc = perc + perceptual_distance(warped * vis, gt_l * vis, extractor);
    } else {
      if (w.l1_corr > 0) l1 = l1 + (warped - gt_l).abs().mean();
      if (w.perc_corr > 0) perc = perc + perceptual_distance(warped, gt_l, extractor);
    }
  }
  out.terms["reg_o"] = w.reg * reg_o;
  out.terms["reg_f"] = w.reg * reg_f;
  out.terms["l1"] = w.l1_corr * l1;
  out.terms["perc"] = w.perc_corr * perc;
  out.total = out.terms["reg_o"] + out.terms["reg_f"] + out.terms["l1"] + out.terms["perc"];
  return out;
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_logits) {
  return F::softplus(-fake_logits).mean();
}

torch::Tensor discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits) {
  return F::softplus(-real_logits).mean() + F::softplus(fake_logits).mean();
}

Stage2Losses stage2_losses(const torch::Tensor& generated, const torch::Tensor& target,
                           const torch::Tensor& fake_logits_for_g,
                           const torch::Tensor& real_logits, const torch::Tensor& fake_logits,
                           const LossWeights& weights, PerceptualExtractor& extractor) {
  TORCH_CHECK(generated.sizes() == target.sizes(), "stage2_losses: generated ",
              generated.sizes(), " and target ", target.sizes(), " differ");
  Stage2Losses out;
  auto& g = out.generator;
  g.terms["adv"] = weights.adv * generator_adversarial_loss(fake_logits_for_g);
  g.terms["l1"] = weights.l1_gen * (generated - target).abs().mean();
  g.terms["perc"] = weights.perc_gen * perceptual_distance(generated, target, extractor);
  g.total = g.terms["adv"] + g.terms["l1"] + g.terms["perc"];
  out.discriminator = discriminator_loss(real_logits, fake_logits);
  return out;
}

}  // namespace gclwarp
