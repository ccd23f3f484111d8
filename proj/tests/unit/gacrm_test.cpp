#include <gtest/gtest.h>

#include "gclwarp/gacrm.hpp"
#include "gclwarp/losses.hpp"
#include "test_util.hpp"

using namespace gclwarp;

namespace {

FeaturePyramid random_pyramid(const std::vector<int>& channels, std::int64_t base) {
  FeaturePyramid p;
  for (std::size_t l = 0; l < channels.size(); ++l)
    p.levels.push_back(torch::randn({1, channels[l], base << l, base << l}));
  return p;
}

}  // namespace

TEST(GacrmLevel, ZeroHeadIsPureUpsampling) {
  torch::manual_seed(0);
  GacrmLevel level(8, 16);
  level->zero_flow_head();
  const FlowField prev{torch::randn({1, 2, 4, 4}), 0};
  const auto r = level->forward(torch::randn({1, 8, 8, 8}), torch::randn({1, 8, 8, 8}), prev);
  EXPECT_TRUE(torch::equal(r.flow.uv, upsample_flow(prev).uv));
  EXPECT_EQ(r.flow.level, 1);
  EXPECT_EQ(r.hidden.sizes(), (std::vector<std::int64_t>{1, 16, 8, 8}));
}

TEST(GacrmLevel, RejectsLevelMismatch) {
  GacrmLevel level(8, 16);
  const FlowField prev{torch::zeros({1, 2, 8, 8}), 0};
  EXPECT_THROW(level->forward(torch::zeros({1, 8, 8, 8}), torch::zeros({1, 8, 8, 8}), prev), std::invalid_argument);
  EXPECT_THROW(level->forward(torch::zeros({1, 8, 8, 8}), torch::zeros({1, 4, 8, 8}), {torch::zeros({1, 2, 4, 4}), 0}),
               std::exception);
}

TEST(GacrmLevel, GatesAreSigmoidRanged) {
  torch::manual_seed(1);
  GacrmLevel level(4, 8, 2);
  std::vector<ConvGru::Impl::Gates> gates;
  level->forward(torch::randn({2, 4, 8, 8}) * 5, torch::randn({2, 4, 8, 8}) * 5, {torch::randn({2, 2, 4, 4}), 0}, {},
        &gates);
  ASSERT_EQ(gates.size(), 2u);
  for (const auto& g : gates) {
    EXPECT_GE(g.update.min().item<float>(), 0.0f);
    EXPECT_LE(g.update.max().item<float>(), 1.0f);
    EXPECT_GE(g.reset.min().item<float>(), 0.0f);
    EXPECT_LE(g.reset.max().item<float>(), 1.0f);
  }
}

TEST(GacrmLevel, GradientOfFlowNormMatchesFiniteDifferences) {
  torch::manual_seed(2);
  GacrmLevel level(2, 3);
  level->to(torch::kDouble);
  const auto x = torch::randn({1, 2, 4, 4}, torch::kDouble), y = torch::randn({1, 2, 4, 4}, torch::kDouble);
  const FlowField prev{testutil::smooth_flow(1, 2, 2, 0) * 0.5, 0};
  std::vector<torch::Tensor> params = level->parameters();
  const auto r = testutil::check_gradients([&] { return level->forward(x, y, prev).flow.uv.abs().sum(); }, params, 3);
  EXPECT_GE(r.probes, 20);
  EXPECT_LT(r.worst, 1e-3);
}

TEST(Gacrm, ShapesFollowPyramid) {
  torch::manual_seed(3);
  Gacrm g(std::vector<int>{6, 4}, 8);
  const auto src = random_pyramid({5, 6, 4}, 8), tgt = random_pyramid({5, 6, 4}, 8);
  const auto flows = g->forward(src, tgt, {torch::zeros({1, 2, 8, 8}), 0});
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].height(), 16);
  EXPECT_EQ(flows[1].height(), 32);
  EXPECT_EQ(flows[1].level, 2);
}

TEST(Gacrm, ZeroHeadsUpsampleF0) {
  torch::manual_seed(4);
  Gacrm g(std::vector<int>{6, 4}, 8);
  for (int l = 1; l <= g->depth(); ++l) g->level(l)->zero_flow_head();
  const FlowField f0{torch::randn({1, 2, 8, 8}), 0};
  const auto flows = g->forward(random_pyramid({5, 6, 4}, 8), random_pyramid({5, 6, 4}, 8), f0);
  EXPECT_TRUE(torch::allclose(flows.back().uv, upsample_flow(upsample_flow(f0)).uv));
}

TEST(Gacrm, FiniteOnRandomInputs) {
  torch::manual_seed(5);
  Gacrm g(std::vector<int>{4, 4}, 8);
  torch::NoGradGuard ng;
  for (int i = 0; i < 100; ++i) {
    const auto flows = g->forward(random_pyramid({4, 4, 4}, 4), random_pyramid({4, 4, 4}, 4),
                         {torch::randn({1, 2, 4, 4}) * 3, 0});
    for (const auto& f : flows) {
      const bool finite = torch::isfinite(f.uv).all().item<bool>();
      ASSERT_TRUE(finite);
    }
  }
}

TEST(Gacrm, ResidualDependsOnlyOnOwnLevelInputs) {
  // Perturbing the finest target features cannot change the level-1 flow.
  torch::manual_seed(6);
  Gacrm g(std::vector<int>{4, 4}, 8);
  torch::NoGradGuard ng;
  const auto src = random_pyramid({4, 4, 4}, 4);
  auto tgt = random_pyramid({4, 4, 4}, 4);
  const FlowField f0{torch::randn({1, 2, 4, 4}), 0};
  const auto a = g->forward(src, tgt, f0);
  tgt.levels[2] = tgt.levels[2] + torch::randn_like(tgt.levels[2]);
  const auto b = g->forward(src, tgt, f0);
  EXPECT_TRUE(torch::equal(a[0].uv, b[0].uv));
  EXPECT_FALSE(torch::equal(a[1].uv, b[1].uv));
}

TEST(Gacrm, LossFGradientReachesFeatures) {
  torch::manual_seed(7);
  Gacrm g(std::vector<int>{4, 4}, 8);
  auto src = random_pyramid({4, 4, 4}, 4);
  for (auto& t : src.levels) t.requires_grad_();
  const auto tgt = random_pyramid({4, 4, 4}, 4);
  const auto flows = g->forward(src, tgt, {torch::zeros({1, 2, 4, 4}), 0});
  const auto grid = LevelGrid::for_image(32, 32, 8);
  loss_f(flows, torch::randn({1, 2, 32, 32}), torch::ones({1, 1, 32, 32}), grid).backward();
  EXPECT_GT(src.levels[1].grad().abs().sum().item<float>(), 0.0f);
}
