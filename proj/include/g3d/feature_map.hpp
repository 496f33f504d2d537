#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "g3d/config.hpp"

G3D_NAMESPACE_BEGIN

/// Row-major, channel-interleaved H x W x C grid.
struct FeatureMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<Real> data;

  FeatureMap() = default;
  FeatureMap(int w, int h, int c, Real fill = 0);

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  Real& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  Real at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
};

/// Texel (i, j) has its centre at (i + 0.5, j + 0.5); lookups outside the map
/// clamp to the border texels.
struct BilinearTap {
  int x0, x1, y0, y1;
  Real fx, fy;
  bool clamped_x, clamped_y;
};

BilinearTap bilinear_tap(int width, int height, Real u, Real v);

void bilinear_sample(const FeatureMap& map, Real u, Real v, std::span<Real> out);
std::vector<Real> bilinear_sample(const FeatureMap& map, Real u, Real v);

/// Accumulates d/du, d/dv (into grad_uv[0..1]) and, if grad_map is non-empty,
/// texel gradients for an upstream gradient on the sampled vector.
void bilinear_sample_backward(const FeatureMap& map, Real u, Real v, std::span<const Real> grad_out,
                              std::span<Real> grad_map, Real grad_uv[2]);

G3D_NAMESPACE_END
