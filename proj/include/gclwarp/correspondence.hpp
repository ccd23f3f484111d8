#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "gclwarp/warping.hpp"

namespace gclwarp {

/// Encoder outputs ordered coarse to fine: levels[0] is the deepest map at
/// stride S, levels[l] has twice the resolution of levels[l - 1].
struct FeaturePyramid {
  std::vector<torch::Tensor> levels;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  const torch::Tensor& operator[](int l) const { return levels.at(l); }
};

/// Fully convolutional branch of stride-2 blocks. With widths {32, 64, 96}
/// the blocks produce strides 2, 4 and 8; the last `levels + 1` block outputs
/// form the pyramid.
class PyramidEncoderImpl : public torch::nn::Module {
 public:
  PyramidEncoderImpl(int in_channels, std::vector<int> widths, int levels);

  /// Input [B, in_channels, H, W] with H and W divisible by 2^widths.size().
  FeaturePyramid forward(const torch::Tensor& input);

  int in_channels() const { return in_channels_; }
  int downscale() const { return 1 << static_cast<int>(blocks_.size()); }

 private:
  struct Block {
    torch::nn::Conv2d down{nullptr};
    torch::nn::InstanceNorm2d norm{nullptr};
    torch::nn::Conv2d conv{nullptr};
  };
  std::vector<Block> blocks_;
  int in_channels_;
  int levels_;
};
TORCH_MODULE(PyramidEncoder);

/// Flattens [B, C, h, w] to [B, N, C] rows (row-major cells) with unit L2 norm.
torch::Tensor flatten_normalized(const torch::Tensor& features);

/// Default ceiling on the bytes of one correlation volume.
inline constexpr std::int64_t kDefaultCorrelationBudget = std::int64_t{1} << 30;

/// Throws std::length_error if a global correlation over the (H/S) x (W/S)
/// grid would need more than `budget_bytes` for `batch` float32 matrices.
void check_correlation_budget(std::int64_t height, std::int64_t width, int downscale,
                              std::int64_t budget_bytes, std::int64_t batch = 1);

/// Raw correlation [B, N, N] with out[t][s] = <y_t, x_s>: rows are target
/// cells, columns source cells. x and y are [B, N, C].
torch::Tensor correlate(const torch::Tensor& x, const torch::Tensor& y,
                        std::int64_t budget_bytes = kDefaultCorrelationBudget);

/// Row-wise softmax of raw / temperature.
CorrespondenceMatrix normalize_correlation(const torch::Tensor& raw, double temperature);

/// G' = o * G for a garment already at the base resolution [B, 3, h, w].
torch::Tensor coarse_warp(const CorrespondenceMatrix& o, const torch::Tensor& garment_base);

/// Level-0 flow from the per-row argmax of o over an (h, w) grid. Ties go to
/// the smallest source index. No gradient flows through the result.
FlowField corr_to_flow(const CorrespondenceMatrix& o, std::int64_t height, std::int64_t width);

}  // namespace gclwarp
