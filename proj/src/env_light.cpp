#include "g3d/env_light.hpp"

#include <cmath>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

EnvTap env_tap(const EnvLayout& layout, const Vec3& d) {
  EnvTap t{};
  const int W = layout.width, H = layout.height;
  const Real xz2 = d.x * d.x + d.z * d.z;
  const Real yc = clamp(d.y, -1, 1);
  const Real u = static_cast<Real>((std::atan2(d.x, -d.z) / (2 * kPi) + 0.5) * W);
  const Real v = static_cast<Real>(std::acos(yc) / kPi * H);
  if (xz2 > Real(1e-20)) {
    const Real s = static_cast<Real>(W / (2 * kPi)) / xz2;
    t.du_dd = {-d.z * s, 0, d.x * s};
  }
  const Real one_minus = 1 - yc * yc;
  if (one_minus > Real(1e-12) && std::abs(d.y) < 1) t.dv_dd = {0, static_cast<Real>(-H / kPi) / std::sqrt(one_minus), 0};

  Real px = u - Real(0.5);
  const Real fxf = std::floor(px);
  const Real fx = px - fxf;
  int x0 = static_cast<int>(fxf) % W;
  if (x0 < 0) x0 += W;
  const int x1 = (x0 + 1) % W;

  Real py = v - Real(0.5);
  bool clamped_y = false;
  if (py < 0) {
    py = 0;
    clamped_y = true;
  } else if (py > Real(H - 1)) {
    py = Real(H - 1);
    clamped_y = true;
  }
  const int y0 = std::min(static_cast<int>(std::floor(py)), H - 1);
  const int y1 = std::min(y0 + 1, H - 1);
  const Real fy = py - static_cast<Real>(y0);

  const std::size_t w = static_cast<std::size_t>(W);
  t.index[0] = y0 * w + x0;
  t.index[1] = y0 * w + x1;
  t.index[2] = y1 * w + x0;
  t.index[3] = y1 * w + x1;
  t.weight[0] = (1 - fx) * (1 - fy);
  t.weight[1] = fx * (1 - fy);
  t.weight[2] = (1 - fx) * fy;
  t.weight[3] = fx * fy;
  t.dweight_du[0] = -(1 - fy);
  t.dweight_du[1] = 1 - fy;
  t.dweight_du[2] = -fy;
  t.dweight_du[3] = fy;
  const Real sy = clamped_y ? Real(0) : Real(1);
  t.dweight_dv[0] = -(1 - fx) * sy;
  t.dweight_dv[1] = -fx * sy;
  t.dweight_dv[2] = (1 - fx) * sy;
  t.dweight_dv[3] = fx * sy;
  return t;
}

Vec3 env_radiance(const EnvLayout& layout, std::span<const Real> texels, const EnvTap& tap) {
  (void)layout;
  Vec3 out;
  for (int i = 0; i < 4; ++i) {
    const Real* c = texels.data() + 3 * tap.index[i];
    out.x += tap.weight[i] * c[0];
    out.y += tap.weight[i] * c[1];
    out.z += tap.weight[i] * c[2];
  }
  return out;
}

Vec3 env_radiance(const EnvLayout& layout, std::span<const Real> texels, const Vec3& d) {
  return env_radiance(layout, texels, env_tap(layout, d));
}

Vec3 env_radiance_backward(const EnvLayout& layout, std::span<const Real> texels, const EnvTap& tap, const Vec3& g,
                           std::span<Real> grad_texels) {
  (void)layout;
  Real gu = 0, gv = 0;
  for (int i = 0; i < 4; ++i) {
    const Real* c = texels.data() + 3 * tap.index[i];
    const Real gc = g.x * c[0] + g.y * c[1] + g.z * c[2];
    gu += tap.dweight_du[i] * gc;
    gv += tap.dweight_dv[i] * gc;
    if (!grad_texels.empty()) {
      Real* gt = grad_texels.data() + 3 * tap.index[i];
      gt[0] += tap.weight[i] * g.x;
      gt[1] += tap.weight[i] * g.y;
      gt[2] += tap.weight[i] * g.z;
    }
  }
  return tap.du_dd * gu + tap.dv_dd * gv;
}

Real env_raw_for(Real c) {
  require(c > 0, ErrorCode::kInvalidArgument, "environment radiance must be positive");
  return c > 20 ? c : static_cast<Real>(std::log(std::expm1(static_cast<double>(c))));
}

Var env_texels(Tape& tape, Var raw) {
  auto r = tape.value(raw);
  std::vector<Real> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = softplus(r[i]);
  return tape.record(std::move(out), {raw}, [raw](Tape& t, Var self) {
    auto g = t.grad(self);
    auto r = t.value(raw);
    auto gr = t.grad(raw);
    for (std::size_t i = 0; i < g.size(); ++i) gr[i] += g[i] * sigmoid(r[i]);
  });
}

G3D_NAMESPACE_END
