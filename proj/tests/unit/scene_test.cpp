#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "gclwarp/dataset_io.hpp"
#include "gclwarp/metrics.hpp"
#include "gclwarp/model.hpp"
#include "gclwarp/scene.hpp"
#include "gclwarp/warping.hpp"

using namespace gclwarp;

namespace {

DatasetEntry entry(std::uint64_t seed, Difficulty d) { return {"s", "train", seed, seed * 31 + 5, d}; }

}  // namespace

TEST(SampleFigure, DeterministicAndSeedSensitive) {
  EXPECT_EQ(sample_figure(7, Difficulty::easy), sample_figure(7, Difficulty::easy));
  EXPECT_FALSE(sample_figure(7, Difficulty::easy).joint_angles == sample_figure(8, Difficulty::easy).joint_angles);
}

TEST(SampleFigure, HardLeavesEasyRanges) {
  const auto& e = easy_ranges();
  for (std::uint64_t seed : {7ull, 11ull, 12ull, 100ull}) {
    const auto fig = sample_figure(seed, Difficulty::hard);
    const auto& a = fig.joint_angles;
    const bool outside = !e.shoulder.contains(a.shoulder_l) || !e.shoulder.contains(a.shoulder_r) ||
                         !e.elbow.contains(a.elbow_l) || !e.elbow.contains(a.elbow_r) ||
                         !e.hip.contains(a.hip_l) || !e.hip.contains(a.hip_r) ||
                         !e.torso_tilt.contains(a.torso_tilt) || !e.shear.contains(fig.shear);
    EXPECT_TRUE(outside) << "seed " << seed;
    EXPECT_FALSE(within_easy_ranges(fig));
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_TRUE(within_easy_ranges(sample_figure(seed, Difficulty::easy)));
}

TEST(SampleFigure, FitsInsideCanvas) {
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (auto d : {Difficulty::easy, Difficulty::hard}) {
      double x0, y0, x1, y1;
      FigureGeometry(sample_figure(seed, d)).bounds(x0, y0, x1, y1);
      EXPECT_GE(x0, 0.0);
      EXPECT_GE(y0, 0.0);
      EXPECT_LE(x1, 63.0);
      EXPECT_LE(y1, 63.0);
    }
}

TEST(Difficulty, StringRoundTrip) {
  EXPECT_EQ(difficulty_from_string(to_string(Difficulty::hard)), Difficulty::hard);
  EXPECT_THROW(difficulty_from_string("medium"), std::invalid_argument);
}

TEST(RenderPair, IdentityPose) {
  const auto fig = sample_figure(3, Difficulty::easy);
  const auto s = render_pair(fig, fig, 9, 64, 64);
  for (float v : s.gt_flow.data) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(s.visibility, s.garment_mask);
  EXPECT_EQ(s.gt_warped, s.garment);
  EXPECT_EQ(make_identity_pair(s).gt_flow, s.gt_flow);
}

TEST(RenderPair, TranslationGivesConstantFlow) {
  auto src = sample_figure(4, Difficulty::easy);
  src.scale *= 0.8;  // leave room to move
  src = fit_to_canvas(src, {});
  auto tgt = src;
  tgt.root_position.x += 3;
  tgt.root_position.y -= 2;
  const auto s = render_pair(src, tgt, 1, 64, 64);
  int visible = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (!s.visibility.at(x, y)) continue;
      ++visible;
      EXPECT_EQ(s.gt_flow.at(x, y, 0), -3.0f);
      EXPECT_EQ(s.gt_flow.at(x, y, 1), 2.0f);
    }
  EXPECT_GT(visible, 100);
}

TEST(RenderPair, RotatedElbowMatchesBruteForceSurfaceMatching) {
  const auto src = sample_figure(5, Difficulty::easy);
  auto tgt = src;
  tgt.joint_angles.elbow_l += std::numbers::pi / 3;
  tgt = fit_to_canvas(tgt, {});
  tgt.limb_lengths = src.limb_lengths;
  const auto s = render_pair(src, tgt, 2, 64, 64);
  const int forearm = static_cast<int>(Part::forearm_l);
  const auto& cap = FigureGeometry(src).capsule(forearm);
  const double su = cap.length + 2 * cap.radius, sv = 2 * cap.radius;  // surface units to pixels

  int checked = 0;
  double total = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (s.pose_tgt.part.at(x, y) != forearm || !s.visibility.at(x, y)) continue;
      const double u = s.pose_tgt.u.at(x, y), v = s.pose_tgt.v.at(x, y);
      double best = std::numeric_limits<double>::max();
      int bx = -1, by = -1;
      for (int qy = 0; qy < 64; ++qy)
        for (int qx = 0; qx < 64; ++qx) {
          if (s.pose_src.part.at(qx, qy) != forearm) continue;
          const double du = (s.pose_src.u.at(qx, qy) - u) * su, dv = (s.pose_src.v.at(qx, qy) - v) * sv;
          const double d = du * du + dv * dv;
          if (d < best) best = d, bx = qx, by = qy;
        }
      const double ex = x + s.gt_flow.at(x, y, 0) - bx, ey = y + s.gt_flow.at(x, y, 1) - by;
      EXPECT_LE(std::max(std::abs(ex), std::abs(ey)), 1.0) << "pixel " << x << "," << y;
      total += std::hypot(ex, ey);
      ++checked;
    }
  ASSERT_GT(checked, 10);
  EXPECT_LT(total / checked, 0.5);
}

TEST(RenderPair, SampleInvariants) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto s = generate_sample(entry(seed, seed % 2 ? Difficulty::hard : Difficulty::easy), 64, 64);
    // Pose maps: u = v = 0 on background.
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (s.pose_tgt.part.at(x, y) == 0) {
          EXPECT_EQ(s.pose_tgt.u.at(x, y), 0.0f);
          EXPECT_EQ(s.pose_tgt.v.at(x, y), 0.0f);
        }
    // Visible pixels are target garment pixels.
    const auto region = garment_region(s.pose_tgt);
    for (std::size_t i = 0; i < region.data.size(); ++i)
      if (s.visibility.data[i]) EXPECT_EQ(region.data[i], 1);
    for (float v : s.target_image.data) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);

    // warp(G, f_gt) masked by V reproduces G_gt exactly.
    const auto g = image_to_tensor(s.garment).unsqueeze(0);
    const auto f = flow_to_tensor(s.gt_flow).unsqueeze(0);
    const auto v = mask_to_tensor(s.visibility).unsqueeze(0);
    EXPECT_TRUE(torch::equal(bilinear_warp(g, f) * v, image_to_tensor(s.gt_warped).unsqueeze(0)));

    // Warped garment mask against the mask of G_gt.
    const auto warped_mask = bilinear_warp(mask_to_tensor(s.garment_mask).unsqueeze(0), f) > 0.5;
    EXPECT_GE(miou(warped_mask[0][0], v[0][0]), 0.98);
  }
}

TEST(RenderPair, Errors) {
  const auto fig = sample_figure(1, Difficulty::easy);
  EXPECT_THROW(render_pair(fig, fig, 0, 60, 64), std::invalid_argument);
  auto other = fig;
  other.limb_lengths.torso += 1;
  EXPECT_THROW(render_pair(fig, other, 0, 64, 64), std::invalid_argument);
}
