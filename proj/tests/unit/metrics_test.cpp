#include <gtest/gtest.h>

#include <fstream>

#include "gclwarp/metrics.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace gclwarp;

TEST(Miou, IdenticalAndComplement) {
  auto m = torch::zeros({4, 4});
  m.slice(1, 0, 2).fill_(1);
  EXPECT_EQ(miou(m, m), 1.0);
  EXPECT_EQ(miou(1 - m, m), 0.0);
}

TEST(Miou, LeftHalfAgainstLeftThreeQuarters) {
  auto gt = torch::zeros({4, 4}), pred = torch::zeros({4, 4});
  gt.slice(1, 0, 2).fill_(1);
  pred.slice(1, 0, 3).fill_(1);
  // garment IoU 8/12, background IoU 4/8.
  EXPECT_NEAR(miou(pred, gt), 0.5 * (2.0 / 3.0 + 0.5), 1e-12);
}

TEST(Miou, EmptyUnionCountsAsOneAndShapeMismatchThrows) {
  EXPECT_EQ(miou(torch::zeros({3, 3}), torch::zeros({3, 3})), 1.0);
  EXPECT_EQ(miou(torch::ones({3, 3}), torch::ones({3, 3})), 1.0);
  EXPECT_THROW(miou(torch::zeros({3, 3}), torch::zeros({3, 4})), std::exception);
}

TEST(Miou, SymmetricPermutationInvariantAndBounded) {
  torch::manual_seed(1);
  for (int i = 0; i < 20; ++i) {
    const auto a = torch::rand({8, 8}) > 0.5, b = torch::rand({8, 8}) > 0.4;
    const double m = miou(a, b);
    EXPECT_EQ(m, miou(b, a));
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
    const auto perm = torch::randperm(64);
    EXPECT_NEAR(miou(a.view(-1).index_select(0, perm), b.view(-1).index_select(0, perm)), m, 1e-12);
  }
}

TEST(MaskedL1, IdentityOffsetAndChecker) {
  const auto img = torch::rand({3, 4, 4});
  const auto mask = torch::ones({4, 4});
  EXPECT_EQ(masked_l1(img, img, mask), 0.0);
  EXPECT_NEAR(masked_l1(img + 0.125, img, mask), 0.125, 1e-6);
  EXPECT_EQ(masked_l1(img, img + 1, torch::zeros({4, 4})), 0.0);
  // Checker: one channel differs by 1 on half the cells, masked to the left
  // half -> 8 cells x 3 channels, 4 cells differ in one channel.
  auto a = torch::zeros({3, 4, 4}), b = torch::zeros({3, 4, 4});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      if ((x + y) % 2 == 0) b[0][y][x] = 1.0f;
  auto left = torch::zeros({4, 4});
  left.slice(1, 0, 2).fill_(1);
  EXPECT_NEAR(masked_l1(a, b, left), 4.0 / 24.0, 1e-12);
}

TEST(EvalReport, MeansSkipErrorsAndEmptyIsZero) {
  EvalReport empty;
  EXPECT_EQ(empty.mean_miou(), 0.0);
  EXPECT_EQ(empty.evaluated(), 0u);
  EvalReport r;
  r.samples = {{"a", 0.5, 0.1, 0.2, ""}, {"b", 0.9, 0.3, 0.4, ""}, {"c", 0, 0, 0, "missing"}};
  EXPECT_EQ(r.evaluated(), 2u);
  EXPECT_NEAR(r.mean_miou(), 0.7, 1e-12);
  EXPECT_NEAR(r.mean_l1_masked(), 0.2, 1e-12);
  EXPECT_NEAR(r.mean_perceptual(), 0.3, 1e-12);
}

TEST(EvalReport, WritesJsonAndCsv) {
  const auto dir = testutil::temp_dir("report");
  EvalReport r;
  r.split = "test";
  r.samples = {{"a", 0.5, 0.1, 0.2, ""}, {"b", 0.0, 0.0, 0.0, "broken, file"}};
  write_report(r, dir / "eval");
  std::ifstream js(dir / "eval.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["split"], "test");
  EXPECT_EQ(j["samples"].size(), 2u);
  EXPECT_NEAR(j["mean"]["miou"].get<double>(), 0.5, 1e-12);
  std::ifstream csv(dir / "eval.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 3);
}
