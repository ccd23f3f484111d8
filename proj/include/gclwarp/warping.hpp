#pragma once

#include <torch/torch.h>

#include <cstdint>

namespace gclwarp {

/// Dense backward flow [B, 2, h, w] in pixels of its own level. Channel 0 is
/// the x displacement, channel 1 the y displacement; output pixel p samples
/// the source at p + flow(p).
struct FlowField {
  torch::Tensor uv;
  int level = 0;

  std::int64_t height() const { return uv.size(2); }
  std::int64_t width() const { return uv.size(3); }
  /// Throws std::invalid_argument on a bad shape or non-finite values.
  void validate() const;
};

/// Row-stochastic correspondence weights [B, N, N]: rows index target cells,
/// columns index source cells, both flattened row-major.
struct CorrespondenceMatrix {
  torch::Tensor weights;
};

/// Pseudo ground-truth correspondence and its support mask M = [o_gt > 0].
struct PseudoGt {
  CorrespondenceMatrix correspondence;
  torch::Tensor mask;       ///< [B, N, N], same dtype as the weights
  torch::Tensor valid_rows; ///< [B, N] bool, rows with any in-bounds tap
};

/// Spatial sizes of the level pyramid: level l is (base_h * 2^l, base_w * 2^l)
/// and the finest level log2(S) is the full image resolution.
struct LevelGrid {
  std::int64_t base_height = 8;
  std::int64_t base_width = 8;
  int max_level = 3;

  static LevelGrid for_image(std::int64_t height, std::int64_t width, int downscale);
  std::int64_t height(int level) const { return base_height << level; }
  std::int64_t width(int level) const { return base_width << level; }
};

/// Samples `image` [B, C, h, w] at p + flow(p) with bilinear weights; taps
/// outside the image contribute zero. Differentiable in image and flow.
torch::Tensor bilinear_warp(const torch::Tensor& image, const torch::Tensor& flow);
inline torch::Tensor bilinear_warp(const torch::Tensor& image, const FlowField& flow) {
  return bilinear_warp(image, flow.uv);
}

/// Scatters the bilinear footprint of every target cell i + flow(i) into a
/// dense N x N matrix. Footprint taps falling outside the grid are dropped
/// without renormalization; fully out-of-bounds rows stay zero. The result is
/// not differentiable.
PseudoGt scatter_pseudo_gt(const FlowField& base_flow);

/// Applies a correspondence matrix to a [B, C, h, w] map: out = o * flat(map).
torch::Tensor apply_correspondence(const CorrespondenceMatrix& o, const torch::Tensor& map);

/// 2x bilinear upsampling with displacements doubled.
FlowField upsample_flow(const FlowField& flow);

enum class FieldKind { image, mask, flow };

/// Resizes an image, mask or flow [B, C, h, w] to (height, width) with
/// half-pixel aligned bilinear interpolation (antialiased when shrinking).
/// Masks are re-binarized at 0.5; flows are rescaled by the size ratio.
torch::Tensor resize_field(const torch::Tensor& field, FieldKind kind,
                           std::int64_t height, std::int64_t width);

/// resize_field to the size of `level`; throws on a level outside the grid.
torch::Tensor resize_to_level(const torch::Tensor& field, FieldKind kind,
                              const LevelGrid& grid, int level);

}  // namespace gclwarp
