#include "gclwarp/correspondence.hpp"

#include <stdexcept>
#include <string>

namespace gclwarp {

namespace F = torch::nn::functional;

PyramidEncoderImpl::PyramidEncoderImpl(int in_channels, std::vector<int> widths, int levels)
    : in_channels_(in_channels), levels_(levels) {
  if (levels < 1 || levels + 1 > static_cast<int>(widths.size()))
    throw std::invalid_argument("PyramidEncoder: need at least levels + 1 blocks");
  int prev = in_channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int w = widths[i];
    Block b;
    b.down = register_module("down" + std::to_string(i),
                             torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, w, 3)
                                                   .stride(2)
                                                   .padding(1)));
    b.norm = register_module("norm" + std::to_string(i),
                             torch::nn::InstanceNorm2d(
                                 torch::nn::InstanceNorm2dOptions(w).affine(true)));
    b.conv = register_module("conv" + std::to_string(i),
                             torch::nn::Conv2d(torch::nn::Conv2dOptions(w, w, 3).padding(1)));
    blocks_.push_back(b);
    prev = w;
  }
}

FeaturePyramid PyramidEncoderImpl::forward(const torch::Tensor& input) {
  TORCH_CHECK(input.dim() == 4 && input.size(1) == in_channels_,
              "PyramidEncoder: expected [B, ", in_channels_, ", H, W], got ", input.sizes());
  const int s = downscale();
  if (input.size(2) % s != 0 || input.size(3) % s != 0)
    throw std::invalid_argument("PyramidEncoder: input " + std::to_string(input.size(2)) +
                                "x" + std::to_string(input.size(3)) +
                                " is not divisible by " + std::to_string(s));
  std::vector<torch::Tensor> outputs;
  auto h = input;
  for (auto& b : blocks_) {
    auto feat = b.conv(F::leaky_relu(b.norm(b.down(h)), F::LeakyReLUFuncOptions().negative_slope(0.2)));
    outputs.push_back(feat);
    h = F::leaky_relu(feat, F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  FeaturePyramid pyr;
  for (int l = 0; l <= levels_; ++l) pyr.levels.push_back(outputs[outputs.size() - 1 - l]);
  return pyr;
}

torch::Tensor flatten_normalized(const torch::Tensor& features) {
  TORCH_CHECK(features.dim() == 4, "flatten_normalized: expected [B,C,h,w]");
  const auto B = features.size(0), C = features.size(1);
  const auto rows = features.reshape({B, C, -1}).transpose(1, 2);
  return F::normalize(rows, F::NormalizeFuncOptions().p(2).dim(-1).eps(1e-8));
}

void check_correlation_budget(std::int64_t height, std::int64_t width, int downscale,
                              std::int64_t budget_bytes, std::int64_t batch) {
  if (downscale <= 0 || height % downscale != 0 || width % downscale != 0)
    throw std::invalid_argument("check_correlation_budget: image size not divisible by S");
  const double n = static_cast<double>(height / downscale) * static_cast<double>(width / downscale);
  const double bytes = n * n * 4.0 * static_cast<double>(batch);
  if (bytes > static_cast<double>(budget_bytes))
    throw std::length_error(
        "global correlation at " + std::to_string(height) + "x" + std::to_string(width) +
        " with S=" + std::to_string(downscale) + " needs N^2 = " +
        std::to_string(static_cast<long long>(n * n)) + " entries (" +
        std::to_string(static_cast<long long>(bytes)) + " bytes), over the budget of " +
        std::to_string(budget_bytes) + " bytes; increase S");
}

torch::Tensor correlate(const torch::Tensor& x, const torch::Tensor& y, std::int64_t budget_bytes) {
  TORCH_CHECK(x.dim() == 3 && y.dim() == 3, "correlate: expected [B, N, C] inputs");
  if (x.size(2) != y.size(2))
    throw std::invalid_argument("correlate: channel mismatch (" + std::to_string(x.size(2)) +
                                " vs " + std::to_string(y.size(2)) + ")");
  TORCH_CHECK(x.size(0) == y.size(0), "correlate: batch mismatch");
  const double bytes = static_cast<double>(x.size(0)) * static_cast<double>(y.size(1)) *
                       static_cast<double>(x.size(1)) * static_cast<double>(x.element_size());
  if (bytes > static_cast<double>(budget_bytes))
    throw std::length_error("correlate: " + std::to_string(y.size(1)) + "x" +
                            std::to_string(x.size(1)) +
                            " correlation exceeds the memory budget of " +
                            std::to_string(budget_bytes) + " bytes");
  return torch::bmm(y, x.transpose(1, 2));
}

CorrespondenceMatrix normalize_correlation(const torch::Tensor& raw, double temperature) {
  if (!(temperature > 0))
    throw std::invalid_argument("normalize_correlation: temperature must be positive");
  return {torch::softmax(raw / temperature, -1)};
}

torch::Tensor coarse_warp(const CorrespondenceMatrix& o, const torch::Tensor& garment_base) {
  return apply_correspondence(o, garment_base);
}

FlowField corr_to_flow(const CorrespondenceMatrix& o, std::int64_t height, std::int64_t width) {
  const auto w = o.weights.detach();
  TORCH_CHECK(w.dim() == 3 && w.size(1) == height * width && w.size(2) == height * width,
              "corr_to_flow: matrix ", w.sizes(), " does not match grid ", height, "x", width);
  const auto N = height * width;
  const auto row_max = std::get<0>(w.max(-1, true));
  const auto index = torch::arange(N, w.options().dtype(torch::kLong)).view({1, 1, N});
  const auto sentinel = torch::full_like(index, N);
  const auto best = torch::where(w == row_max, index, sentinel).amin(-1);  // [B, N]
  const auto src_x = (best % width).to(w.dtype());
  const auto src_y = (best.div(width, "floor")).to(w.dtype());
  const auto cells = torch::arange(N, w.options().dtype(torch::kLong));
  const auto tgt_x = (cells % width).to(w.dtype()).unsqueeze(0);
  const auto tgt_y = (cells.div(width, "floor")).to(w.dtype()).unsqueeze(0);
  const auto B = w.size(0);
  auto uv = torch::stack({src_x - tgt_x, src_y - tgt_y}, 1).view({B, 2, height, width});
  return {uv, 0};
}

}  // namespace gclwarp
