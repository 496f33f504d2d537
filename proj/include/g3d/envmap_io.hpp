#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "g3d/env_light.hpp"

G3D_NAMESPACE_BEGIN

/// Equirectangular radiance texels (H x W x 3).
struct EnvMapData {
  EnvLayout layout;
  std::vector<Real> texels;
};

/// "G3DE", u32 width, u32 height, then little-endian f32 texels.
std::vector<std::uint8_t> encode_envmap(const EnvMapData& env);
EnvMapData decode_envmap(std::span<const std::uint8_t> bytes);

/// Chooses the container by extension: .png (LDR, clamped to [0, 1]) or raw f32.
void save_envmap(const std::filesystem::path& path, const EnvMapData& env);
EnvMapData load_envmap(const std::filesystem::path& path);

G3D_NAMESPACE_END
