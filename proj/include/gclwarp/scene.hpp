#pragma once

#include <cstdint>

#include "gclwarp/figure.hpp"
#include "gclwarp/raster.hpp"

namespace gclwarp {

/// Per-pixel IUV body representation. `part` is 0 on background, where u and v
/// are both 0.
struct PoseMap {
  Mask part;  ///< part index per pixel, 0..kNumParts
  Image u;    ///< 1 channel, [0,1]
  Image v;    ///< 1 channel, [0,1]

  int width() const { return part.width; }
  int height() const { return part.height; }
  bool operator==(const PoseMap&) const = default;
};

/// One training pair with exact ground truth.
struct SceneSample {
  Image source_image;     ///< H x W x 3
  Image target_image;     ///< H x W x 3
  PoseMap pose_src;
  PoseMap pose_tgt;
  Image garment;          ///< source garment, zero outside garment_mask
  Mask garment_mask;      ///< garment pixels of the source figure
  FlowRaster gt_flow;     ///< backward flow: target p samples source p + f(p)
  Mask visibility;        ///< target garment pixels visible in the source
  Image gt_warped;        ///< garment warped by gt_flow, zero where not visible

  int width() const { return source_image.width; }
  int height() const { return source_image.height; }
  bool operator==(const SceneSample&) const = default;
};

/// Rasterizes the figure's parts with z-order from draw_order().
PoseMap render_pose(const ArticulatedFigure& fig, int height, int width);

/// Renders a source/target pair of one identity. Ground-truth flows are
/// snapped to whole pixels so that warped garments stay exactly 8-bit.
/// Throws std::invalid_argument unless height and width are divisible by
/// `downscale` and the figures share limb lengths.
SceneSample render_pair(const ArticulatedFigure& fig_src,
                        const ArticulatedFigure& fig_tgt,
                        std::uint64_t texture_seed, int height, int width,
                        int downscale = 8);

/// The pair (source, source) built from a sample: zero flow, full visibility.
SceneSample make_identity_pair(const SceneSample& sample);

/// Pixels of a pose map whose part is covered by the garment.
Mask garment_region(const PoseMap& pose);

}  // namespace gclwarp
