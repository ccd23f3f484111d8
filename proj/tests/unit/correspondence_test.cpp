#include <gtest/gtest.h>

#include <cmath>

#include "gclwarp/correspondence.hpp"
#include "gclwarp/losses.hpp"
#include "test_util.hpp"

using namespace gclwarp;

namespace {

torch::Tensor eye_batch(std::int64_t n) { return torch::eye(n).unsqueeze(0); }

}  // namespace

TEST(PyramidEncoder, LevelSizesFor64) {
  torch::manual_seed(0);
  PyramidEncoder enc(15, std::vector<int>{32, 64, 96}, 2);
  const auto pyr = enc(torch::rand({2, 15, 64, 64}));
  ASSERT_EQ(pyr.depth(), 2);
  EXPECT_EQ(pyr[0].sizes(), (std::vector<std::int64_t>{2, 96, 8, 8}));
  EXPECT_EQ(pyr[1].sizes(), (std::vector<std::int64_t>{2, 64, 16, 16}));
  EXPECT_EQ(pyr[2].sizes(), (std::vector<std::int64_t>{2, 32, 32, 32}));
  EXPECT_EQ(enc->downscale(), 8);
}

TEST(PyramidEncoder, DeterministicAndZeroPreserving) {
  torch::manual_seed(0);
  PyramidEncoder enc(12, std::vector<int>{8, 8, 8}, 2);
  const auto x = torch::rand({1, 12, 16, 16});
  const auto a = enc(x), b = enc(x);
  for (int l = 0; l <= 2; ++l) EXPECT_TRUE(torch::equal(a[l], b[l]));

  // With every bias zero (normalization shift included) a zero input maps to
  // zero features.
  {
    torch::NoGradGuard ng;
    for (auto& p : enc->named_parameters())
      if (p.key().find("bias") != std::string::npos) p.value().zero_();
  }
  const auto z = enc(torch::zeros({1, 12, 16, 16}));
  for (int l = 0; l <= 2; ++l) EXPECT_EQ(z[l].abs().max().item<float>(), 0.0f);
}

TEST(PyramidEncoder, RejectsIndivisibleInput) {
  PyramidEncoder enc(12, std::vector<int>{8, 8, 8}, 2);
  EXPECT_THROW(enc(torch::zeros({1, 12, 20, 16})), std::exception);
}

TEST(Correlate, OrthonormalFeaturesGiveIdentity) {
  const auto x = eye_batch(8);
  EXPECT_TRUE(torch::allclose(correlate(x, x), eye_batch(8)));
}

TEST(Correlate, PermutedTargetsPickPermutedSources) {
  torch::manual_seed(1);
  const auto x = flatten_normalized(torch::randn({1, 16, 4, 4}));
  const auto perm = torch::randperm(16);
  const auto y = x.index_select(1, perm);
  const auto arg = correlate(x, y).argmax(2)[0];
  EXPECT_TRUE(torch::equal(arg, perm));
}

TEST(Correlate, MatchesBruteForceDotProducts) {
  torch::manual_seed(2);
  const auto x = torch::randn({1, 16, 8}), y = torch::randn({1, 16, 8});
  const auto raw = correlate(x, y);
  for (int t = 0; t < 16; ++t)
    for (int s = 0; s < 16; ++s) {
      double dot = 0;
      for (int c = 0; c < 8; ++c) dot += y[0][t][c].item<double>() * x[0][s][c].item<double>();
      EXPECT_NEAR(raw[0][t][s].item<double>(), dot, 1e-6);
    }
}

TEST(Correlate, NormalizedRowsBoundValues) {
  torch::manual_seed(3);
  const auto raw = correlate(flatten_normalized(torch::randn({1, 8, 4, 4})),
                             flatten_normalized(torch::randn({1, 8, 4, 4})));
  EXPECT_LE(raw.abs().max().item<float>(), 1.0f + 1e-6f);
}

TEST(Correlate, RejectsChannelMismatch) {
  EXPECT_THROW(correlate(torch::zeros({1, 4, 3}), torch::zeros({1, 4, 5})), std::invalid_argument);
}

TEST(Correlate, BudgetRefusesOversizedVolumes) {
  // 256x256 at S=1 needs 65536^2 floats = 16 GiB.
  EXPECT_THROW(check_correlation_budget(256, 256, 1, kDefaultCorrelationBudget), std::length_error);
  EXPECT_NO_THROW(check_correlation_budget(256, 256, 8, kDefaultCorrelationBudget));
  EXPECT_THROW(correlate(torch::zeros({1, 64, 2}), torch::zeros({1, 64, 2}), 1000), std::length_error);
}

TEST(NormalizeCorrelation, SaturatesAndStaysUniform) {
  const auto o = normalize_correlation(torch::tensor({10.0, 0.0, 0.0}).view({1, 1, 3}), 0.01).weights;
  EXPECT_NEAR(o[0][0][0].item<double>(), 1.0, 1e-9);
  const auto u = normalize_correlation(torch::full({1, 5, 5}, 0.3), 0.07).weights;
  EXPECT_TRUE(torch::allclose(u, torch::full({1, 5, 5}, 0.2)));
}

TEST(NormalizeCorrelation, OrthonormalDiagonalDominates) {
  for (int n : {4, 16, 64}) {
    const auto o = normalize_correlation(correlate(eye_batch(n), eye_batch(n)), 0.1).weights;
    EXPECT_GT(o[0].diagonal().min().item<float>(), 0.99f) << "N = " << n;
    EXPECT_LT((o.sum(2) - 1).abs().max().item<float>(), 1e-5f);
  }
}

TEST(NormalizeCorrelation, ShiftInvariantPerRow) {
  torch::manual_seed(4);
  const auto raw = torch::randn({2, 6, 6});
  const auto shift = torch::randn({2, 6, 1}) * 5;
  const auto a = normalize_correlation(raw, 0.07).weights;
  const auto b = normalize_correlation(raw + shift, 0.07).weights;
  EXPECT_LT((a - b).abs().max().item<float>(), 1e-5f);
}

TEST(NormalizeCorrelation, RejectsNonPositiveTemperature) {
  EXPECT_THROW(normalize_correlation(torch::zeros({1, 2, 2}), 0.0), std::invalid_argument);
  EXPECT_THROW(normalize_correlation(torch::zeros({1, 2, 2}), -1.0), std::invalid_argument);
}

TEST(CoarseWarp, IdentityAndPermutation) {
  torch::manual_seed(5);
  const auto g = torch::rand({1, 3, 4, 4});
  EXPECT_TRUE(torch::equal(coarse_warp({eye_batch(16)}, g), g));
  const auto perm = torch::randperm(16);
  const auto p = torch::eye(16).index_select(0, perm).unsqueeze(0);
  const auto out = coarse_warp({p}, g).view({3, 16});
  EXPECT_TRUE(torch::equal(out, g.view({3, 16}).index_select(1, perm)));
}

TEST(CoarseWarp, PseudoGtMatchesFlowWarp) {
  torch::manual_seed(6);
  const auto f = torch::randn({1, 2, 8, 8}) * 2;
  const auto g = torch::rand({1, 3, 8, 8});
  const auto out = coarse_warp(scatter_pseudo_gt({f, 0}).correspondence, g);
  EXPECT_LT((out - bilinear_warp(g, f)).abs().max().item<float>(), 1e-6f);
}

TEST(CoarseWarp, RejectsSizeMismatch) {
  EXPECT_THROW(coarse_warp({eye_batch(16)}, torch::zeros({1, 3, 4, 5})), std::exception);
}

TEST(CorrToFlow, IdentityGivesZero) {
  const auto f = corr_to_flow({eye_batch(64)}, 8, 8);
  EXPECT_EQ(f.level, 0);
  EXPECT_EQ(f.uv.abs().max().item<float>(), 0.0f);
}

TEST(CorrToFlow, CircularShiftByOne) {
  // Target cell t matches source cell (t + 1) mod 64.
  auto o = torch::zeros({1, 64, 64});
  for (int t = 0; t < 64; ++t) o[0][t][(t + 1) % 64] = 1.0f;
  const auto f = corr_to_flow({o}, 8, 8).uv;
  for (int t = 0; t < 64; ++t) {
    const int s = (t + 1) % 64;
    EXPECT_EQ(f[0][0][t / 8][t % 8].item<float>(), static_cast<float>(s % 8 - t % 8));
    EXPECT_EQ(f[0][1][t / 8][t % 8].item<float>(), static_cast<float>(s / 8 - t / 8));
  }
}

TEST(CorrToFlow, TiesGoToSmallestIndex) {
  auto o = torch::zeros({1, 16, 16});
  o[0][0][3] = 0.5f;
  o[0][0][9] = 0.5f;
  const auto f = corr_to_flow({o}, 4, 4).uv;
  EXPECT_EQ(f[0][0][0][0].item<float>(), 3.0f);
  EXPECT_EQ(f[0][1][0][0].item<float>(), 0.0f);
}

TEST(CorrToFlow, NoGradient) {
  const auto o = torch::rand({1, 16, 16}, torch::TensorOptions().requires_grad(true));
  EXPECT_FALSE(corr_to_flow({o}, 4, 4).uv.requires_grad());
}

TEST(CorrelationGradients, MatchFiniteDifferences) {
  torch::manual_seed(7);
  const auto x = torch::randn({1, 3, 2, 2}, torch::kDouble).requires_grad_();
  const auto y = torch::randn({1, 3, 2, 2}, torch::kDouble).requires_grad_();
  const auto w = torch::rand({1, 4, 4}, torch::kDouble);
  const auto r = testutil::check_gradients(
      [&] {
        return (normalize_correlation(correlate(flatten_normalized(x), flatten_normalized(y)), 0.5).weights * w)
            .sum();
      },
      {x, y}, 20);
  EXPECT_LT(r.worst, 1e-3);
}

TEST(CorrelationGradients, LossOReachesEncoderParameters) {
  torch::manual_seed(8);
  PyramidEncoder src(4, std::vector<int>{3, 3}, 1), tgt(4, std::vector<int>{3, 3}, 1);
  src->to(torch::kDouble);
  tgt->to(torch::kDouble);
  const auto in_s = torch::rand({1, 4, 8, 8}, torch::kDouble), in_t = torch::rand({1, 4, 8, 8}, torch::kDouble);
  const auto pseudo = scatter_pseudo_gt({torch::randn({1, 2, 2, 2}, torch::kDouble) * 0.6, 0});
  const auto rows = torch::rand({1, 4, 3}, torch::kDouble);
  auto loss = [&] {
    const auto o = normalize_correlation(
        correlate(flatten_normalized(src(in_s)[0]), flatten_normalized(tgt(in_t)[0])), 0.5);
    return loss_o(o, pseudo, rows);
  };
  std::vector<torch::Tensor> params;
  for (auto& p : src->parameters()) params.push_back(p);
  const auto r = testutil::check_gradients(loss, params, 4);
  EXPECT_GE(r.probes, 20);
  EXPECT_LT(r.worst, 1e-3);
}
