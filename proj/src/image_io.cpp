#include "g3d/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

std::uint8_t to_byte(Real v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes, int channels) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    fail(ErrorCode::kIo, std::string("png decode failed: ") + img.message);
  if (channels == 0) channels = (img.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument, "png: channels must be 1 or 3");
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCode::kIo, "png decode failed: " + msg);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data[i] = static_cast<Real>(buf[i] / 255.0);
  return out;
}

Image read_png(const std::filesystem::path& path, int channels) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png(bytes, channels);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  require(image.channels == 1 || image.channels == 3, ErrorCode::kInvalidArgument, "png: channels must be 1 or 3");
  require(image.width > 0 && image.height > 0, ErrorCode::kInvalidArgument, "png: empty image");
  std::vector<std::uint8_t> px(image.data.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(image.data[i]);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, px.data(), 0, nullptr))
    fail(ErrorCode::kIo, std::string("png encode failed: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, px.data(), 0, nullptr))
    fail(ErrorCode::kIo, std::string("png encode failed: ") + img.message);
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(f), ErrorCode::kIo, "write failed: " + path.string());
}

Image downsample(const Image& image, int factor) {
  require(factor >= 1 && image.width % factor == 0 && image.height % factor == 0, ErrorCode::kInvalidArgument,
          "downsample: size not divisible by factor");
  if (factor == 1) return image;
  Image out(image.width / factor, image.height / factor, image.channels);
  const Real inv = Real(1) / static_cast<Real>(factor * factor);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        Real acc = 0;
        for (int j = 0; j < factor; ++j)
          for (int i = 0; i < factor; ++i) acc += image.at(x * factor + i, y * factor + j, c);
        out.at(x, y, c) = acc * inv;
      }
  return out;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (Real& v : out.data) v = static_cast<Real>(to_byte(v) / 255.0);
  return out;
}

G3D_NAMESPACE_END
