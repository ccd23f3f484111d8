#pragma once

#include <torch/torch.h>

#include <span>
#include <string>
#include <vector>

#include "gclwarp/config.hpp"
#include "gclwarp/correspondence.hpp"
#include "gclwarp/gacrm.hpp"
#include "gclwarp/scene.hpp"
#include "gclwarp/warping.hpp"

namespace gclwarp {

/// Pose maps enter the encoders as one-hot part channels followed by u, v.
inline constexpr int kPoseChannels = kNumParts + 2;

torch::Tensor pose_to_tensor(const PoseMap& pose);     ///< [kPoseChannels, H, W]
torch::Tensor image_to_tensor(const Image& image);     ///< [C, H, W]
torch::Tensor mask_to_tensor(const Mask& mask);        ///< [1, H, W], 0/1 floats
torch::Tensor flow_to_tensor(const FlowRaster& flow);  ///< [2, H, W]
/// [C, H, W] in [0,1] back to a raster (values are not quantized).
Image tensor_to_image(const torch::Tensor& chw);

/// Stacked tensors for a list of samples, all [B, C, H, W] float32.
struct Batch {
  torch::Tensor pose_src, pose_tgt;
  torch::Tensor garment, garment_mask;
  torch::Tensor gt_flow, visibility, gt_warped;
  torch::Tensor target_image, target_garment_mask;

  std::int64_t size() const { return garment.size(0); }
};

Batch make_batch(std::span<const SceneSample> samples);

/// Stage-one network: two pose-aware encoders, the global correlation with
/// argmax flow conversion, and per-level refinement. With
/// `use_global_correspondence` off, f_0 comes from a convolution head on the
/// concatenated deepest features instead.
class CorrespondenceNetImpl : public torch::nn::Module {
 public:
  explicit CorrespondenceNetImpl(const Config& config);

  struct Output {
    torch::Tensor raw_correlation;  ///< undefined without global correspondence
    CorrespondenceMatrix correspondence;
    std::vector<FlowField> flows;   ///< f_0 ... f_L
    FeaturePyramid source, target;
  };

  Output forward(const torch::Tensor& pose_src, const torch::Tensor& garment,
                 const torch::Tensor& pose_tgt);

  /// f_L brought to full image resolution.
  FlowField full_resolution_flow(const Output& out) const;

  const LevelGrid& grid() const { return grid_; }
  PyramidEncoder& source_encoder() { return source_encoder_; }
  PyramidEncoder& target_encoder() { return target_encoder_; }
  Gacrm& gacrm() { return gacrm_; }
  bool uses_global_correspondence() const { return !flow0_head_; }

 private:
  PyramidEncoder source_encoder_{nullptr}, target_encoder_{nullptr};
  Gacrm gacrm_{nullptr};
  torch::nn::Sequential flow0_head_{nullptr};
  LevelGrid grid_;
  double temperature_;
  std::int64_t budget_;
};
TORCH_MODULE(CorrespondenceNet);

}  // namespace gclwarp
