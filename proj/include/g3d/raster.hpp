#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "g3d/camera.hpp"

G3D_NAMESPACE_BEGIN

/// Per-pixel visibility of one view. tri is -1 where nothing is covered.
/// covered lists covered pixel indices (y * W + x) in scanline order and
/// slot maps each pixel to its position in that list (-1 if uncovered).
struct GBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> tri;
  std::vector<Real> depth;
  std::vector<std::uint32_t> covered;
  std::vector<std::int32_t> slot;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Z-buffered rasterization at pixel centres. Coverage is inclusive on edges,
/// both windings are drawn, ties in depth keep the lower triangle index, and
/// triangles with a vertex closer than the near depth are skipped.
GBuffer rasterize(std::span<const Vec3> positions, std::span<const std::array<std::uint32_t, 3>> triangles,
                  const CameraView& cam);

G3D_NAMESPACE_END
