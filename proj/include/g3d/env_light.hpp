#pragma once

#include <span>
#include <vector>

#include "g3d/math.hpp"
#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

/// Equirectangular radiance map, H x W x 3 row-major. Direction d maps to
/// u = (atan2(d.x, -d.z) / 2pi + 0.5) W and v = acos(d.y) / pi H, so row 0 is
/// the +Y pole. Lookups are bilinear, wrapping in u and clamping in v.
struct EnvLayout {
  int width = 32;
  int height = 16;

  std::size_t texel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t value_count() const { return 3 * texel_count(); }
};

struct EnvTap {
  std::size_t index[4];  // texel indices (times 3 gives offset)
  Real weight[4];
  // d(weight)/du and d(weight)/dv, zero along clamped axes.
  Real dweight_du[4];
  Real dweight_dv[4];
  Vec3 du_dd, dv_dd;  // d(u, v) / d(direction)
};

EnvTap env_tap(const EnvLayout& layout, const Vec3& d);

Vec3 env_radiance(const EnvLayout& layout, std::span<const Real> texels, const Vec3& d);
Vec3 env_radiance(const EnvLayout& layout, std::span<const Real> texels, const EnvTap& tap);

/// Accumulates texel gradients and returns d/d(direction) of g . radiance.
Vec3 env_radiance_backward(const EnvLayout& layout, std::span<const Real> texels, const EnvTap& tap, const Vec3& g,
                           std::span<Real> grad_texels);

/// Raw parameter giving the texel value c after softplus (c > 0).
Real env_raw_for(Real c);

/// Tape op: texels = softplus(raw).
Var env_texels(Tape& tape, Var raw);

G3D_NAMESPACE_END
