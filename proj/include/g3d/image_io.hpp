#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "g3d/config.hpp"

G3D_NAMESPACE_BEGIN

/// Row-major, channel-interleaved image with values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<Real> data;

  Image() = default;
  Image(int w, int h, int c, Real fill = 0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  Real& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  Real at(int x, int y, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

/// Decodes an 8- or 16-bit PNG. `channels` selects 1 (gray), 3 (RGB) or 0 to
/// keep gray images gray and everything else RGB. Alpha is dropped.
Image decode_png(std::span<const std::uint8_t> bytes, int channels = 0);
Image read_png(const std::filesystem::path& path, int channels = 0);

/// 8-bit PNG of a 1- or 3-channel image, values clamped to [0, 1].
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

/// Average pooling by an integer factor.
Image downsample(const Image& image, int factor);

/// Rounds every value to the nearest 8-bit level, as a PNG round trip would.
Image quantize8(const Image& image);

G3D_NAMESPACE_END
