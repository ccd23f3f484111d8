#include "gclwarp/dataset_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include "json.hpp"

namespace gclwarp {

namespace {

using json = nlohmann::json;

// Little-endian byte helpers.
void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f32(std::vector<char>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}
std::uint32_t get_u32(const std::vector<char>& in, std::size_t& pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}
float get_f32(const std::vector<char>& in, std::size_t& pos) {
  return std::bit_cast<float>(get_u32(in, pos));
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

/// Validates magic and header; returns (width, height) and advances `pos`.
std::pair<int, int> read_header(const fs::path& path, const std::vector<char>& bytes,
                                const char* magic, std::size_t record_size,
                                std::size_t& pos) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), magic, 4) != 0)
    throw IoError(path, std::string("bad magic, expected ") + magic);
  pos = 4;
  const std::uint32_t w = get_u32(bytes, pos);
  const std::uint32_t h = get_u32(bytes, pos);
  if (bytes.size() != 12 + static_cast<std::size_t>(w) * h * record_size)
    throw IoError(path, "truncated or oversized payload");
  return {static_cast<int>(w), static_cast<int>(h)};
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

struct FileCloser {
  void operator()(FILE* f) const { if (f) std::fclose(f); }
};

void write_png_bytes(const fs::path& path, int width, int height, int channels,
                     const std::vector<std::uint8_t>& pixels) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError(path, "png allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path, "png encoding failed");
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png_bytes(const fs::path& path, int expected_channels,
                                         int& width, int& height) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError(path, "cannot open for reading");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError(path, "png allocation failed");
  }
  std::vector<std::uint8_t> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path, "png decoding failed");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (png_get_bit_depth(png, info) != 8 || channels != expected_channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path, "unexpected png format");
  }
  pixels.resize(static_cast<std::size_t>(width) * height * channels);
  for (int y = 0; y < height; ++y)
    png_read_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

json entry_to_json(const DatasetEntry& e) {
  return {{"id", e.id},
          {"split", e.split},
          {"seed", e.seed},
          {"texture_seed", e.texture_seed},
          {"difficulty", to_string(e.difficulty)}};
}

}  // namespace

void write_flo3(const fs::path& path, const FlowRaster& flow) {
  if (flow.channels != 2) throw std::invalid_argument("write_flo3: flow needs 2 channels");
  std::vector<char> out{'3', 'G', 'C', 'L'};
  out.reserve(12 + flow.data.size() * 4);
  put_u32(out, static_cast<std::uint32_t>(flow.width));
  put_u32(out, static_cast<std::uint32_t>(flow.height));
  for (float f : flow.data) put_f32(out, f);
  write_bytes(path, out);
}

FlowRaster read_flo3(const fs::path& path) {
  const auto bytes = read_bytes(path);
  std::size_t pos = 0;
  const auto [w, h] = read_header(path, bytes, "3GCL", 8, pos);
  FlowRaster flow(w, h, 2);
  for (float& f : flow.data) f = get_f32(bytes, pos);
  return flow;
}

void write_pose_bin(const fs::path& path, const PoseMap& pose) {
  std::vector<char> out{'I', 'U', 'V', '1'};
  out.reserve(12 + pose.part.data.size() * 9);
  put_u32(out, static_cast<std::uint32_t>(pose.width()));
  put_u32(out, static_cast<std::uint32_t>(pose.height()));
  for (std::size_t i = 0; i < pose.part.data.size(); ++i) {
    out.push_back(static_cast<char>(pose.part.data[i]));
    put_f32(out, pose.u.data[i]);
    put_f32(out, pose.v.data[i]);
  }
  write_bytes(path, out);
}

PoseMap read_pose_bin(const fs::path& path) {
  const auto bytes = read_bytes(path);
  std::size_t pos = 0;
  const auto [w, h] = read_header(path, bytes, "IUV1", 9, pos);
  PoseMap pose{Mask(w, h, 1), Image(w, h, 1), Image(w, h, 1)};
  for (std::size_t i = 0; i < pose.part.data.size(); ++i) {
    pose.part.data[i] = static_cast<std::uint8_t>(bytes[pos++]);
    if (pose.part.data[i] > kNumParts) throw IoError(path, "part index out of range");
    pose.u.data[i] = get_f32(bytes, pos);
    pose.v.data[i] = get_f32(bytes, pos);
  }
  return pose;
}

void write_png(const fs::path& path, const Image& image) {
  if (image.channels != 3) throw std::invalid_argument("write_png: expected 3 channels");
  std::vector<std::uint8_t> px(image.data.size());
  std::transform(image.data.begin(), image.data.end(), px.begin(), quantize);
  write_png_bytes(path, image.width, image.height, 3, px);
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> px(mask.data.size());
  std::transform(mask.data.begin(), mask.data.end(), px.begin(),
                 [](std::uint8_t m) -> std::uint8_t { return m ? 255 : 0; });
  write_png_bytes(path, mask.width, mask.height, 1, px);
}

Image read_png(const fs::path& path) {
  int w = 0, h = 0;
  const auto px = read_png_bytes(path, 3, w, h);
  Image img(w, h, 3);
  std::transform(px.begin(), px.end(), img.data.begin(), from_byte);
  return img;
}

Mask read_mask_png(const fs::path& path) {
  int w = 0, h = 0;
  const auto px = read_png_bytes(path, 1, w, h);
  Mask m(w, h, 1);
  std::transform(px.begin(), px.end(), m.data.begin(),
                 [](std::uint8_t b) -> std::uint8_t { return b >= 128 ? 1 : 0; });
  return m;
}

std::vector<DatasetEntry> Manifest::split(const std::string& name) const {
  std::vector<DatasetEntry> out;
  for (const auto& e : entries)
    if (e.split == name) out.push_back(e);
  return out;
}

SceneSample generate_sample(const DatasetEntry& entry, int height, int width,
                            int downscale) {
  const Canvas canvas{height, width};
  const ArticulatedFigure src = sample_figure(2 * entry.seed, Difficulty::easy, canvas);
  ArticulatedFigure tgt = sample_figure(2 * entry.seed + 1, entry.difficulty, canvas);
  tgt.limb_lengths = src.limb_lengths;
  tgt = fit_to_canvas(tgt, canvas);
  return render_pair(src, tgt, entry.texture_seed, height, width, downscale);
}

fs::path sample_dir(const fs::path& root, const DatasetEntry& entry) {
  return root / entry.split / entry.id;
}

void write_sample(const fs::path& dir, const SceneSample& s) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
  write_png(dir / "source.png", s.source_image);
  write_png(dir / "target.png", s.target_image);
  write_pose_bin(dir / "pose_src.bin", s.pose_src);
  write_pose_bin(dir / "pose_tgt.bin", s.pose_tgt);
  write_png(dir / "garment.png", s.garment);
  write_mask_png(dir / "garment_mask.png", s.garment_mask);
  write_flo3(dir / "gt_flow.flo3", s.gt_flow);
  write_mask_png(dir / "visibility.png", s.visibility);
  write_png(dir / "gt_warped.png", s.gt_warped);
}

SceneSample read_sample(const fs::path& dir) {
  SceneSample s;
  s.source_image = read_png(dir / "source.png");
  s.target_image = read_png(dir / "target.png");
  s.pose_src = read_pose_bin(dir / "pose_src.bin");
  s.pose_tgt = read_pose_bin(dir / "pose_tgt.bin");
  s.garment = read_png(dir / "garment.png");
  s.garment_mask = read_mask_png(dir / "garment_mask.png");
  s.gt_flow = read_flo3(dir / "gt_flow.flo3");
  s.visibility = read_mask_png(dir / "visibility.png");
  s.gt_warped = read_png(dir / "gt_warped.png");
  const int w = s.source_image.width, h = s.source_image.height;
  for (int dim : {s.target_image.width, s.pose_src.width(), s.pose_tgt.width(),
                  s.garment.width, s.garment_mask.width, s.gt_flow.width,
                  s.visibility.width, s.gt_warped.width})
    if (dim != w) throw IoError(dir, "inconsistent field widths");
  for (int dim : {s.target_image.height, s.pose_src.height(), s.pose_tgt.height(),
                  s.garment.height, s.garment_mask.height, s.gt_flow.height,
                  s.visibility.height, s.gt_warped.height})
    if (dim != h) throw IoError(dir, "inconsistent field heights");
  return s;
}

void write_manifest(const fs::path& root, const Manifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) entries.push_back(entry_to_json(e));
  const json doc = {{"format", "gclwarp-dataset"},
                    {"version", 1},
                    {"height", manifest.height},
                    {"width", manifest.width},
                    {"samples", entries}};
  const std::string text = doc.dump(2) + "\n";
  write_bytes(root / "manifest.json", std::vector<char>(text.begin(), text.end()));
}

Manifest read_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  const auto bytes = read_bytes(path);
  Manifest m;
  try {
    const json doc = json::parse(bytes.begin(), bytes.end());
    m.height = doc.at("height").get<int>();
    m.width = doc.at("width").get<int>();
    for (const auto& j : doc.at("samples")) {
      DatasetEntry e;
      e.id = j.at("id").get<std::string>();
      e.split = j.at("split").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.texture_seed = j.at("texture_seed").get<std::uint64_t>();
      e.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw IoError(path, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest write_dataset(std::span<const LabeledSample> samples, const fs::path& root,
                       int height, int width) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError(root, "cannot create directory: " + ec.message());
  Manifest m{height, width, {}};
  for (const auto& ls : samples) {
    if (ls.sample.height() != height || ls.sample.width() != width)
      throw std::invalid_argument("write_dataset: sample " + ls.entry.id +
                                  " has the wrong size");
    write_sample(sample_dir(root, ls.entry), ls.sample);
    m.entries.push_back(ls.entry);
  }
  write_manifest(root, m);
  return m;
}

}  // namespace gclwarp
