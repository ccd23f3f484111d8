#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gclwarp {

/// Interleaved row-major H x W x C buffer used by the data side of the project
/// (rendering and file IO). The learning side works on torch tensors instead.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || c <= 0)
      throw std::invalid_argument("Raster: invalid shape");
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_shape(const Raster& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool operator==(const Raster&) const = default;
};

using Image = Raster<float>;      ///< values in [0,1]
using Mask = Raster<std::uint8_t>;  ///< 0 / 1
using FlowRaster = Raster<float>;  ///< 2 channels: (u = dx, v = dy) in pixels

/// 8-bit quantized intensity. All rendered images hold values of this form so
/// that PNG storage is lossless.
inline float from_byte(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }

}  // namespace gclwarp
