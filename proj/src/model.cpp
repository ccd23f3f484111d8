#include "gclwarp/model.hpp"

#include <stdexcept>

namespace gclwarp {

torch::Tensor pose_to_tensor(const PoseMap& pose) {
  const int H = pose.height(), W = pose.width();
  auto t = torch::zeros({kPoseChannels, H, W}, torch::kFloat);
  auto a = t.accessor<float, 3>();
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const int part = pose.part.at(x, y);
      if (part == 0) continue;
      a[part - 1][y][x] = 1.0f;
      a[kNumParts][y][x] = pose.u.at(x, y);
      a[kNumParts + 1][y][x] = pose.v.at(x, y);
    }
  return t;
}

torch::Tensor image_to_tensor(const Image& image) {
  // Raster is HWC interleaved.
  return torch::from_blob(const_cast<float*>(image.data.data()),
                          {image.height, image.width, image.channels}, torch::kFloat)
      .permute({2, 0, 1})
      .contiguous();
}

torch::Tensor mask_to_tensor(const Mask& mask) {
  return torch::from_blob(const_cast<std::uint8_t*>(mask.data.data()),
                          {mask.height, mask.width, mask.channels}, torch::kUInt8)
      .permute({2, 0, 1})
      .to(torch::kFloat)
      .contiguous();
}

torch::Tensor flow_to_tensor(const FlowRaster& flow) { return image_to_tensor(flow); }

Image tensor_to_image(const torch::Tensor& chw) {
  TORCH_CHECK(chw.dim() == 3, "tensor_to_image: expected [C, H, W]");
  const auto hwc = chw.detach().to(torch::kFloat).permute({1, 2, 0}).contiguous();
  Image img(static_cast<int>(chw.size(2)), static_cast<int>(chw.size(1)),
            static_cast<int>(chw.size(0)));
  std::copy(hwc.data_ptr<float>(), hwc.data_ptr<float>() + hwc.numel(), img.data.begin());
  return img;
}

Batch make_batch(std::span<const SceneSample> samples) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty sample list");
  std::vector<torch::Tensor> ps, pt, g, gm, f, v, gw, ti, tm;
  for (const auto& s : samples) {
    ps.push_back(pose_to_tensor(s.pose_src));
    pt.push_back(pose_to_tensor(s.pose_tgt));
    g.push_back(image_to_tensor(s.garment));
    gm.push_back(mask_to_tensor(s.garment_mask));
    f.push_back(flow_to_tensor(s.gt_flow));
    v.push_back(mask_to_tensor(s.visibility));
    gw.push_back(image_to_tensor(s.gt_warped));
    ti.push_back(image_to_tensor(s.target_image));
    tm.push_back(mask_to_tensor(garment_region(s.pose_tgt)));
  }
  return {torch::stack(ps), torch::stack(pt), torch::stack(g),  torch::stack(gm), torch::stack(f),
          torch::stack(v),  torch::stack(gw), torch::stack(ti), torch::stack(tm)};
}

CorrespondenceNetImpl::CorrespondenceNetImpl(const Config& config)
    : grid_(LevelGrid::for_image(config.image_height, config.image_width, config.downscale)),
      temperature_(config.temperature),
      budget_(config.correlation_budget_bytes) {
  config.validate();
  source_encoder_ = register_module(
      "source_encoder", PyramidEncoder(kPoseChannels + 3, config.encoder_widths, config.levels));
  target_encoder_ = register_module(
      "target_encoder", PyramidEncoder(kPoseChannels, config.encoder_widths, config.levels));
  // Pyramid level l comes from block (blocks - 1 - l).
  const int blocks = static_cast<int>(config.encoder_widths.size());
  std::vector<int> level_channels;
  for (int l = 1; l <= config.levels; ++l) level_channels.push_back(config.encoder_widths[blocks - 1 - l]);
  gacrm_ = register_module("gacrm", Gacrm(level_channels, config.gru_hidden, config.gru_iterations));
  if (!config.use_global_correspondence) {
    const int c = config.encoder_widths.back();
    flow0_head_ = register_module(
        "flow0_head",
        torch::nn::Sequential(
            torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * c, 64, 3).padding(1)),
            torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 2, 3).padding(1))));
  } else {
    check_correlation_budget(config.image_height, config.image_width, config.downscale, budget_,
                             config.optimizer.batch_size);
  }
}

CorrespondenceNetImpl::Output CorrespondenceNetImpl::forward(const torch::Tensor& pose_src,
                                                            const torch::Tensor& garment,
                                                            const torch::Tensor& pose_tgt) {
  TORCH_CHECK(pose_src.sizes() == pose_tgt.sizes(), "CorrespondenceNet: pose maps differ in shape");
  TORCH_CHECK(garment.size(2) == pose_src.size(2) && garment.size(3) == pose_src.size(3),
              "CorrespondenceNet: garment and pose sizes differ");
  Output out;
  out.source = source_encoder_(torch::cat({pose_src, garment}, 1));
  out.target = target_encoder_(pose_tgt);
  const auto& x0 = out.source[0];
  const auto& y0 = out.target[0];
  FlowField f0;
  if (!flow0_head_) {
    out.raw_correlation = correlate(flatten_normalized(x0), flatten_normalized(y0), budget_);
    out.correspondence = normalize_correlation(out.raw_correlation, temperature_);
    f0 = corr_to_flow(out.correspondence, x0.size(2), x0.size(3));
  } else {
    f0 = {flow0_head_->forward(torch::cat({x0, y0}, 1)), 0};
  }
  out.flows.push_back(f0);
  for (auto& f : gacrm_(out.source, out.target, f0)) out.flows.push_back(f);
  return out;
}

FlowField CorrespondenceNetImpl::full_resolution_flow(const Output& out) const {
  FlowField f = out.flows.back();
  while (f.level < grid_.max_level) f = upsample_flow(f);
  return f;
}

}  // namespace gclwarp
