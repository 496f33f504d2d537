#include "g3d/pafm.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "g3d/error.hpp"

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

}  // namespace

std::vector<std::uint8_t> write_pafm(const FeatureMap& map) {
  std::vector<std::uint8_t> out{'P', 'A', 'F', 'M'};
  out.reserve(kPafmHeaderBytes + 4 * map.data.size());
  put_u32(out, kPafmVersion);
  put_u32(out, static_cast<std::uint32_t>(map.width));
  put_u32(out, static_cast<std::uint32_t>(map.height));
  put_u32(out, static_cast<std::uint32_t>(map.channels));
  for (Real v : map.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

FeatureMap read_pafm(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4, ErrorCode::kTruncated, "pafm: truncated header");
  require(std::memcmp(bytes.data(), "PAFM", 4) == 0, ErrorCode::kBadMagic, "pafm: bad magic");
  require(bytes.size() >= kPafmHeaderBytes, ErrorCode::kTruncated, "pafm: truncated header");
  const std::uint32_t version = get_u32(bytes, 4);
  require(version == kPafmVersion, ErrorCode::kVersionMismatch, "pafm: unsupported version " + std::to_string(version));
  const std::uint32_t w = get_u32(bytes, 8), h = get_u32(bytes, 12), c = get_u32(bytes, 16);
  require(w > 0 && h > 0 && c > 0, ErrorCode::kSizeMismatch, "pafm: zero dimension");
  const std::uint64_t count = static_cast<std::uint64_t>(w) * h * c;
  const std::uint64_t payload = bytes.size() - kPafmHeaderBytes;
  require(payload >= 4 * count, ErrorCode::kTruncated, "pafm: truncated payload");
  require(payload == 4 * count, ErrorCode::kSizeMismatch, "pafm: payload larger than declared size");
  FeatureMap map(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  for (std::uint64_t i = 0; i < count; ++i)
    map.data[i] = static_cast<Real>(std::bit_cast<float>(get_u32(bytes, kPafmHeaderBytes + 4 * i)));
  return map;
}

void save_pafm(const std::filesystem::path& path, const FeatureMap& map) {
  const auto bytes = write_pafm(map);
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(f), ErrorCode::kIo, "write failed: " + path.string());
}

FeatureMap load_pafm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return read_pafm(bytes);
}

G3D_NAMESPACE_END
