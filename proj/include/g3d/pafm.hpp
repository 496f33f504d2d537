#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "g3d/feature_map.hpp"

G3D_NAMESPACE_BEGIN

inline constexpr std::uint32_t kPafmVersion = 1;
inline constexpr std::size_t kPafmHeaderBytes = 20;

/// "PAFM", u32 version, u32 width, height, channels, then little-endian f32
/// values row-major and channel-interleaved. The payload must match the
/// declared size exactly: short payloads are kTruncated, long ones kSizeMismatch.
std::vector<std::uint8_t> write_pafm(const FeatureMap& map);
FeatureMap read_pafm(std::span<const std::uint8_t> bytes);

void save_pafm(const std::filesystem::path& path, const FeatureMap& map);
FeatureMap load_pafm(const std::filesystem::path& path);

G3D_NAMESPACE_END
