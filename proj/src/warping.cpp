#include "gclwarp/warping.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gclwarp {

namespace F = torch::nn::functional;

void FlowField::validate() const {
  if (!uv.defined() || uv.dim() != 4 || uv.size(1) != 2)
    throw std::invalid_argument("FlowField: expected [B, 2, h, w]");
  if (!torch::isfinite(uv).all().item<bool>())
    throw std::invalid_argument("FlowField: non-finite displacement");
}

LevelGrid LevelGrid::for_image(std::int64_t height, std::int64_t width, int downscale) {
  if (downscale <= 0 || !std::has_single_bit(static_cast<unsigned>(downscale)))
    throw std::invalid_argument("downscale factor must be a power of two");
  if (height % downscale != 0 || width % downscale != 0)
    throw std::invalid_argument("image size " + std::to_string(height) + "x" +
                                std::to_string(width) + " is not divisible by " +
                                std::to_string(downscale));
  return {height / downscale, width / downscale,
          std::countr_zero(static_cast<unsigned>(downscale))};
}

torch::Tensor bilinear_warp(const torch::Tensor& image, const torch::Tensor& flow) {
  TORCH_CHECK(image.dim() == 4 && flow.dim() == 4 && flow.size(1) == 2,
              "bilinear_warp: expected image [B,C,h,w] and flow [B,2,h,w]");
  TORCH_CHECK(image.size(0) == flow.size(0) && image.size(2) == flow.size(2) &&
                  image.size(3) == flow.size(3),
              "bilinear_warp: image ", image.sizes(), " and flow ", flow.sizes(),
              " differ in shape");
  const auto B = image.size(0), C = image.size(1), H = image.size(2), W = image.size(3);
  const auto opts = flow.options();
  const auto xs = torch::arange(W, opts).view({1, 1, W});
  const auto ys = torch::arange(H, opts).view({1, H, 1});
  const auto px = xs + flow.select(1, 0);
  const auto py = ys + flow.select(1, 1);
  const auto x0 = px.detach().floor();
  const auto y0 = py.detach().floor();
  const auto fx = px - x0;
  const auto fy = py - y0;
  const auto flat = image.reshape({B, C, H * W});

  torch::Tensor out;
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      const auto xi = x0 + dx;
      const auto yi = y0 + dy;
      const auto inside = (xi >= 0) & (xi <= W - 1) & (yi >= 0) & (yi <= H - 1);
      const auto wx = dx ? fx : 1 - fx;
      const auto wy = dy ? fy : 1 - fy;
      const auto w = wx * wy * inside.to(opts.dtype());
      const auto idx = (yi.clamp(0, H - 1) * W + xi.clamp(0, W - 1))
                           .to(torch::kLong)
                           .view({B, 1, H * W})
                           .expand({B, C, H * W});
      const auto tap = flat.gather(2, idx).view({B, C, H, W}) * w.unsqueeze(1);
      out = out.defined() ? out + tap : tap;
    }
  return out;
}

namespace {

template <typename scalar_t>
void scatter_rows(const torch::Tensor& flow, torch::Tensor& weights) {
  const auto B = flow.size(0), H = flow.size(2), W = flow.size(3);
  const auto f = flow.accessor<scalar_t, 4>();
  auto o = weights.accessor<scalar_t, 3>();
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t y = 0; y < H; ++y)
      for (std::int64_t x = 0; x < W; ++x) {
        // Same arithmetic and precision as bilinear_warp so that both routes
        // agree to rounding.
        const scalar_t px = static_cast<scalar_t>(x) + f[b][0][y][x];
        const scalar_t py = static_cast<scalar_t>(y) + f[b][1][y][x];
        const scalar_t x0 = std::floor(px), y0 = std::floor(py);
        const scalar_t fx = px - x0, fy = py - y0;
        const std::int64_t row = y * W + x;
        for (int dy = 0; dy <= 1; ++dy)
          for (int dx = 0; dx <= 1; ++dx) {
            const scalar_t xi = x0 + dx, yi = y0 + dy;
            if (xi < 0 || xi > W - 1 || yi < 0 || yi > H - 1) continue;
            const scalar_t w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy);
            if (w > 0)
              o[b][row][static_cast<std::int64_t>(yi) * W + static_cast<std::int64_t>(xi)] = w;
          }
      }
}

}  // namespace

PseudoGt scatter_pseudo_gt(const FlowField& base_flow) {
  TORCH_CHECK(base_flow.uv.dim() == 4 && base_flow.uv.size(1) == 2,
              "scatter_pseudo_gt: expected flow [B,2,h,w]");
  const auto flow = base_flow.uv.detach().contiguous().cpu();
  const auto B = flow.size(0), N = flow.size(2) * flow.size(3);
  auto weights = torch::zeros({B, N, N}, flow.options());
  AT_DISPATCH_FLOATING_TYPES(flow.scalar_type(), "scatter_pseudo_gt",
                             [&] { scatter_rows<scalar_t>(flow, weights); });
  weights = weights.to(base_flow.uv.device());
  auto mask = (weights > 0).to(weights.dtype());
  auto valid = mask.sum(-1) > 0;
  return {{weights}, mask, valid};
}

torch::Tensor apply_correspondence(const CorrespondenceMatrix& o, const torch::Tensor& map) {
  TORCH_CHECK(map.dim() == 4, "apply_correspondence: expected map [B,C,h,w]");
  const auto B = map.size(0), C = map.size(1), H = map.size(2), W = map.size(3);
  TORCH_CHECK(o.weights.dim() == 3 && o.weights.size(0) == B &&
                  o.weights.size(1) == H * W && o.weights.size(2) == H * W,
              "apply_correspondence: matrix ", o.weights.sizes(),
              " does not match map ", map.sizes());
  const auto flat = map.reshape({B, C, H * W}).transpose(1, 2);  // [B, N, C]
  return torch::bmm(o.weights, flat).transpose(1, 2).reshape({B, C, H, W});
}

FlowField upsample_flow(const FlowField& flow) {
  const auto up = resize_field(flow.uv, FieldKind::flow, flow.height() * 2, flow.width() * 2);
  return {up, flow.level + 1};
}

torch::Tensor resize_field(const torch::Tensor& field, FieldKind kind,
                           std::int64_t height, std::int64_t width) {
  TORCH_CHECK(field.dim() == 4, "resize_field: expected [B,C,h,w]");
  TORCH_CHECK(kind != FieldKind::flow || field.size(1) == 2,
              "resize_field: flows need 2 channels");
  const auto h = field.size(2), w = field.size(3);
  torch::Tensor out = field;
  if (h != height || w != width) {
    const bool shrinking = height < h || width < w;
    out = F::interpolate(field, F::InterpolateFuncOptions()
                                    .size(std::vector<std::int64_t>{height, width})
                                    .mode(torch::kBilinear)
                                    .align_corners(false)
                                    .antialias(shrinking));
  }
  switch (kind) {
    case FieldKind::image:
      return out;
    case FieldKind::mask:
      return (out >= 0.5).to(field.dtype());
    case FieldKind::flow: {
      if (h == height && w == width) return out;
      const auto scale =
          torch::tensor({static_cast<double>(width) / w, static_cast<double>(height) / h},
                        field.options())
              .view({1, 2, 1, 1});
      return out * scale;
    }
  }
  return out;
}

torch::Tensor resize_to_level(const torch::Tensor& field, FieldKind kind,
                              const LevelGrid& grid, int level) {
  if (level < 0 || level > grid.max_level)
    throw std::invalid_argument("resize_to_level: level " + std::to_string(level) +
                                " outside [0, " + std::to_string(grid.max_level) + "]");
  return resize_field(field, kind, grid.height(level), grid.width(level));
}

}  // namespace gclwarp
