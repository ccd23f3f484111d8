#include "gclwarp/scene.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gclwarp {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

struct Palette {
  Rgb background, skin, pants;
  Rgb checker_a, checker_b, logo;
  Rgb stripe_a, stripe_b;
};

Palette make_palette(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xC0105EEDULL);
  std::uniform_int_distribution<int> bright(60, 255);
  auto color = [&] {
    return Rgb{static_cast<std::uint8_t>(bright(rng)),
               static_cast<std::uint8_t>(bright(rng)),
               static_cast<std::uint8_t>(bright(rng))};
  };
  Palette p;
  p.background = {40, 40, 48};
  p.skin = {224, 172, 140};
  p.pants = color();
  p.checker_a = color();
  p.checker_b = color();
  p.logo = color();
  p.stripe_a = color();
  p.stripe_b = color();
  return p;
}

/// Surface texture: a checker with a logo disk on the torso, stripes on the
/// sleeves.
Rgb texel(const Palette& pal, int part, double u, double v) {
  auto parity = [](double a, double b) {
    return (static_cast<int>(std::floor(a)) + static_cast<int>(std::floor(b))) & 1;
  };
  switch (part) {
    case 0:
      return pal.background;
    case 1: {
      const double du = (u - 0.62) / 0.14, dv = (v - 0.5) / 0.24;
      if (du * du + dv * dv <= 1.0) return pal.logo;
      return parity(u * 4, v * 3) ? pal.checker_a : pal.checker_b;
    }
    case 2:
      return pal.skin;
    case 3:
    case 5:
      return parity(u * 5, 0) ? pal.stripe_a : pal.stripe_b;
    case 4:
    case 6:
      return parity(u * 4 + 0.5, 0) ? pal.stripe_a : pal.stripe_b;
    default:
      return pal.pants;
  }
}

Image paint(const PoseMap& pose, const Palette& pal) {
  Image img(pose.width(), pose.height(), 3);
  for (int y = 0; y < pose.height(); ++y)
    for (int x = 0; x < pose.width(); ++x) {
      const Rgb c = texel(pal, pose.part.at(x, y), pose.u.at(x, y), pose.v.at(x, y));
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = from_byte(c[ch]);
    }
  return img;
}

/// Closest pixel with mask value 0, ties broken by row then column.
bool nearest_unmasked(const Mask& mask, int px, int py, int& qx, int& qy) {
  const int reach = std::max(mask.width, mask.height);
  long best = -1;
  for (int r = 1; r <= reach; ++r) {
    if (best >= 0 && static_cast<long>(r) * r > best) break;
    for (int y = py - r; y <= py + r; ++y)
      for (int x = px - r; x <= px + r; ++x) {
        if (std::max(std::abs(x - px), std::abs(y - py)) != r) continue;
        if (!mask.contains(x, y) || mask.at(x, y)) continue;
        const long d2 = static_cast<long>(x - px) * (x - px) +
                        static_cast<long>(y - py) * (y - py);
        if (best < 0 || d2 < best || (d2 == best && (y < qy || (y == qy && x < qx)))) {
          best = d2;
          qx = x;
          qy = y;
        }
      }
  }
  return best >= 0;
}

}  // namespace

PoseMap render_pose(const ArticulatedFigure& fig, int height, int width) {
  PoseMap pose{Mask(width, height, 1), Image(width, height, 1),
               Image(width, height, 1)};
  const FigureGeometry geo(fig);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int part : draw_order()) {
        double u, v;
        if (geo.image_to_surface(part, {double(x), double(y)}, u, v)) {
          pose.part.at(x, y) = static_cast<std::uint8_t>(part);
          pose.u.at(x, y) = static_cast<float>(u);
          pose.v.at(x, y) = static_cast<float>(v);
        }
      }
  return pose;
}

Mask garment_region(const PoseMap& pose) {
  Mask m(pose.width(), pose.height(), 1);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = is_garment_part(pose.part.data[i]) ? 1 : 0;
  return m;
}

SceneSample render_pair(const ArticulatedFigure& fig_src,
                        const ArticulatedFigure& fig_tgt,
                        std::uint64_t texture_seed, int height, int width,
                        int downscale) {
  if (downscale <= 0 || height <= 0 || width <= 0 || height % downscale != 0 ||
      width % downscale != 0)
    throw std::invalid_argument("render_pair: image size " +
                                std::to_string(height) + "x" + std::to_string(width) +
                                " is not divisible by " + std::to_string(downscale));
  if (!(fig_src.limb_lengths == fig_tgt.limb_lengths))
    throw std::invalid_argument("render_pair: figures must share limb lengths");

  const Palette pal = make_palette(texture_seed);
  SceneSample s;
  s.pose_src = render_pose(fig_src, height, width);
  s.pose_tgt = render_pose(fig_tgt, height, width);
  s.source_image = paint(s.pose_src, pal);
  s.target_image = paint(s.pose_tgt, pal);
  s.garment_mask = garment_region(s.pose_src);
  s.garment = Image(width, height, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (s.garment_mask.at(x, y))
        for (int c = 0; c < 3; ++c) s.garment.at(x, y, c) = s.source_image.at(x, y, c);

  s.gt_flow = FlowRaster(width, height, 2);
  s.visibility = Mask(width, height, 1);
  s.gt_warped = Image(width, height, 3);
  const FigureGeometry src_geo(fig_src);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int part = s.pose_tgt.part.at(x, y);
      int qx = x, qy = y;
      bool matched = false;
      if (part != 0) {
        const Vec2 q = src_geo.surface_to_image(part, s.pose_tgt.u.at(x, y),
                                                s.pose_tgt.v.at(x, y));
        qx = static_cast<int>(std::floor(q.x + 0.5));
        qy = static_cast<int>(std::floor(q.y + 0.5));
        matched = s.pose_src.part.contains(qx, qy) && s.pose_src.part.at(qx, qy) == part;
      }
      if (!matched) {
        // No visible counterpart: point at the closest non-garment source
        // pixel so the warped garment mask stays empty here.
        qx = x;
        qy = y;
        if (s.garment_mask.at(x, y)) nearest_unmasked(s.garment_mask, x, y, qx, qy);
      }
      s.gt_flow.at(x, y, 0) = static_cast<float>(qx - x);
      s.gt_flow.at(x, y, 1) = static_cast<float>(qy - y);
      if (matched && is_garment_part(part)) {
        s.visibility.at(x, y) = 1;
        for (int c = 0; c < 3; ++c) s.gt_warped.at(x, y, c) = s.garment.at(qx, qy, c);
      }
    }
  return s;
}

SceneSample make_identity_pair(const SceneSample& sample) {
  SceneSample s = sample;
  s.target_image = sample.source_image;
  s.pose_tgt = sample.pose_src;
  s.gt_flow = FlowRaster(sample.width(), sample.height(), 2);
  s.visibility = sample.garment_mask;
  s.gt_warped = sample.garment;
  return s;
}

}  // namespace gclwarp
