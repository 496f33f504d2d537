#include "g3d/envmap_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "g3d/error.hpp"
#include "g3d/image_io.hpp"

G3D_NAMESPACE_BEGIN

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

bool is_png(const std::filesystem::path& p) { return p.extension() == ".png" || p.extension() == ".PNG"; }

}  // namespace

std::vector<std::uint8_t> encode_envmap(const EnvMapData& env) {
  require(env.texels.size() == env.layout.value_count(), ErrorCode::kShapeMismatch, "envmap: texel count");
  std::vector<std::uint8_t> out{'G', '3', 'D', 'E'};
  put_u32(out, static_cast<std::uint32_t>(env.layout.width));
  put_u32(out, static_cast<std::uint32_t>(env.layout.height));
  for (Real v : env.texels) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

EnvMapData decode_envmap(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4, ErrorCode::kTruncated, "envmap: truncated header");
  require(std::memcmp(bytes.data(), "G3DE", 4) == 0, ErrorCode::kBadMagic, "envmap: bad magic");
  require(bytes.size() >= 12, ErrorCode::kTruncated, "envmap: truncated header");
  EnvMapData env;
  env.layout.width = static_cast<int>(get_u32(bytes, 4));
  env.layout.height = static_cast<int>(get_u32(bytes, 8));
  require(env.layout.width > 0 && env.layout.height > 0, ErrorCode::kSizeMismatch, "envmap: zero dimension");
  const std::size_t count = env.layout.value_count();
  require(bytes.size() - 12 >= 4 * count, ErrorCode::kTruncated, "envmap: truncated payload");
  require(bytes.size() - 12 == 4 * count, ErrorCode::kSizeMismatch, "envmap: payload larger than declared size");
  env.texels.resize(count);
  for (std::size_t i = 0; i < count; ++i) env.texels[i] = static_cast<Real>(std::bit_cast<float>(get_u32(bytes, 12 + 4 * i)));
  return env;
}

void save_envmap(const std::filesystem::path& path, const EnvMapData& env) {
  if (is_png(path)) {
    Image img(env.layout.width, env.layout.height, 3);
    img.data = env.texels;
    write_png(path, img);
    return;
  }
  const auto bytes = encode_envmap(env);
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EnvMapData load_envmap(const std::filesystem::path& path) {
  if (is_png(path)) {
    const Image img = read_png(path, 3);
    EnvMapData env;
    env.layout = {img.width, img.height};
    env.texels = img.data;
    return env;
  }
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_envmap(bytes);
}

G3D_NAMESPACE_END
