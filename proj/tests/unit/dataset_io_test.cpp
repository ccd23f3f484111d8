#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "gclwarp/dataset_io.hpp"
#include "gclwarp/pipeline.hpp"
#include "test_util.hpp"

using namespace gclwarp;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Concatenation of every file under `root` in path order.
std::string tree_bytes(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, root).string() + "\n" + slurp(f);
  return all;
}

Config small_config(int train, int test, int hard) {
  Config c;
  c.count_train = train;
  c.count_test = test;
  c.count_hard = hard;
  c.data_seed = 42;
  return c;
}

}  // namespace

TEST(Codecs, FlowRoundTrip) {
  const auto dir = testutil::temp_dir("flo3");
  FlowRaster f(5, 3, 2);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = 0.25f * static_cast<float>(i) - 3.1f;
  write_flo3(dir / "a.flo3", f);
  EXPECT_EQ(read_flo3(dir / "a.flo3"), f);
}

TEST(Codecs, PoseRoundTrip) {
  const auto dir = testutil::temp_dir("pose");
  const auto s = generate_sample({"x", "train", 3, 4, Difficulty::easy}, 64, 64);
  write_pose_bin(dir / "p.bin", s.pose_src);
  EXPECT_EQ(read_pose_bin(dir / "p.bin"), s.pose_src);
}

TEST(Codecs, PngRoundTripIsExactFor8BitValues) {
  const auto dir = testutil::temp_dir("png");
  Image img(7, 5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = from_byte(static_cast<std::uint8_t>(i * 37));
  write_png(dir / "i.png", img);
  EXPECT_EQ(read_png(dir / "i.png"), img);
  Mask m(7, 5, 1);
  m.at(2, 3) = 1;
  write_mask_png(dir / "m.png", m);
  EXPECT_EQ(read_mask_png(dir / "m.png"), m);
}

TEST(Codecs, ErrorsNameTheFile) {
  const auto dir = testutil::temp_dir("bad");
  std::ofstream(dir / "short.flo3") << "3GCL";
  try {
    read_flo3(dir / "short.flo3");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), dir / "short.flo3");
    EXPECT_NE(std::string(e.what()).find("short.flo3"), std::string::npos);
  }
  EXPECT_THROW(read_png(dir / "missing.png"), IoError);
  std::ofstream(dir / "wrong.bin") << "NOPE0000000000";
  EXPECT_THROW(read_pose_bin(dir / "wrong.bin"), IoError);
}

TEST(Dataset, WriteAndReadSamples) {
  const auto dir = testutil::temp_dir("ds_rw");
  std::vector<LabeledSample> samples;
  for (std::uint64_t i = 0; i < 3; ++i) {
    DatasetEntry e{"id" + std::to_string(i), i == 2 ? "hardpose" : "train", i, i + 10,
                   i == 2 ? Difficulty::hard : Difficulty::easy};
    samples.push_back({e, generate_sample(e, 64, 64)});
  }
  const auto m = write_dataset(samples, dir, 64, 64);
  EXPECT_EQ(read_manifest(dir), m);
  EXPECT_EQ(m.split("train").size(), 2u);
  for (const auto& s : samples) {
    const auto d = sample_dir(dir, s.entry);
    for (const char* f : {"source.png", "target.png", "pose_src.bin", "pose_tgt.bin", "garment.png",
                          "garment_mask.png", "gt_flow.flo3", "visibility.png", "gt_warped.png"})
      EXPECT_TRUE(fs::exists(d / f)) << f;
    EXPECT_EQ(read_sample(d), s.sample);
  }
}

TEST(Dataset, EmptyListGivesEmptyManifest) {
  const auto dir = testutil::temp_dir("ds_empty");
  const auto m = write_dataset({}, dir, 64, 64);
  EXPECT_TRUE(m.entries.empty());
  EXPECT_TRUE(read_manifest(dir).entries.empty());
}

TEST(Dataset, UnwritableRootReportsPath) {
  const auto dir = testutil::temp_dir("ds_blocked");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(write_dataset({}, dir / "file" / "sub", 64, 64), IoError);
}

TEST(GenerateData, CountsAndSplits) {
  const auto plan = plan_dataset(small_config(500, 100, 100));
  EXPECT_EQ(plan.size(), 700u);
  int hard_train = 0;
  for (const auto& e : plan)
    if (e.split == "train" && e.difficulty == Difficulty::hard) ++hard_train;
  EXPECT_EQ(hard_train, 150);
  EXPECT_TRUE(plan_dataset(small_config(0, 0, 0)).empty());
  EXPECT_THROW(plan_dataset(small_config(-1, 0, 0)), std::invalid_argument);
}

TEST(GenerateData, RerunIsByteIdentical) {
  const auto a = testutil::temp_dir("gen_a"), b = testutil::temp_dir("gen_b");
  const auto cfg = small_config(4, 2, 2);
  const auto ma = generate_dataset(cfg, a);
  generate_dataset(cfg, b);
  EXPECT_EQ(ma.entries.size(), 8u);
  EXPECT_EQ(tree_bytes(a), tree_bytes(b));
  auto other = cfg;
  other.data_seed = 43;
  const auto c = testutil::temp_dir("gen_c");
  generate_dataset(other, c);
  EXPECT_NE(tree_bytes(a), tree_bytes(c));
}
