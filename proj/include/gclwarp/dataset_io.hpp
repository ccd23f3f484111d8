#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gclwarp/figure.hpp"
#include "gclwarp/scene.hpp"

namespace gclwarp {

namespace fs = std::filesystem;

/// File-level failure; `path()` names the offending file.
class IoError : public std::runtime_error {
 public:
  IoError(const fs::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Single-file codecs. All multi-byte values are little-endian.

/// `.flo3`: "3GCL", u32 width, u32 height, height*width (f32 u, f32 v).
void write_flo3(const fs::path& path, const FlowRaster& flow);
FlowRaster read_flo3(const fs::path& path);

/// Pose `.bin`: "IUV1", u32 width, u32 height, records (u8 part, f32 u, f32 v).
void write_pose_bin(const fs::path& path, const PoseMap& pose);
PoseMap read_pose_bin(const fs::path& path);

/// 8-bit PNG. RGB images are quantized with round-to-nearest; masks are
/// written as 0/255 grayscale.
void write_png(const fs::path& path, const Image& image);
void write_mask_png(const fs::path& path, const Mask& mask);
Image read_png(const fs::path& path);
Mask read_mask_png(const fs::path& path);

// Dataset layout: <root>/manifest.json and <root>/<split>/<id>/...

struct DatasetEntry {
  std::string id;
  std::string split;  ///< "train", "test" or "hardpose"
  std::uint64_t seed = 0;
  std::uint64_t texture_seed = 0;
  Difficulty difficulty = Difficulty::easy;
  bool operator==(const DatasetEntry&) const = default;
};

struct Manifest {
  int height = 0;
  int width = 0;
  std::vector<DatasetEntry> entries;

  std::vector<DatasetEntry> split(const std::string& name) const;
  bool operator==(const Manifest&) const = default;
};

struct LabeledSample {
  DatasetEntry entry;
  SceneSample sample;
};

/// Figure pair and texture for one entry: the source is always an easy pose,
/// the target follows the entry's difficulty and inherits the source identity.
SceneSample generate_sample(const DatasetEntry& entry, int height, int width,
                            int downscale = 8);

fs::path sample_dir(const fs::path& root, const DatasetEntry& entry);

void write_sample(const fs::path& dir, const SceneSample& sample);
SceneSample read_sample(const fs::path& dir);

/// Writes every sample and the manifest. An empty list produces an empty
/// manifest and no sample directories.
Manifest write_dataset(std::span<const LabeledSample> samples,
                       const fs::path& root, int height, int width);

void write_manifest(const fs::path& root, const Manifest& manifest);
Manifest read_manifest(const fs::path& root);

}  // namespace gclwarp
