#include "g3d/feature_map.hpp"

#include <cmath>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

FeatureMap::FeatureMap(int w, int h, int c, Real fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
  require(w >= 1 && h >= 1 && c >= 1, ErrorCode::kInvalidArgument, "feature map dimensions must be positive");
}

BilinearTap bilinear_tap(int width, int height, Real u, Real v) {
  BilinearTap t{};
  auto axis = [](Real p, int n, int& i0, int& i1, Real& f, bool& clamped) {
    Real x = p - Real(0.5);
    clamped = false;
    if (!(x > 0)) {
      x = 0;
      clamped = true;
    } else if (x >= Real(n - 1)) {
      x = Real(n - 1);
      clamped = true;
    }
    i0 = std::min(static_cast<int>(std::floor(x)), n - 1);
    i1 = std::min(i0 + 1, n - 1);
    f = x - static_cast<Real>(i0);
  };
  axis(u, width, t.x0, t.x1, t.fx, t.clamped_x);
  axis(v, height, t.y0, t.y1, t.fy, t.clamped_y);
  return t;
}

void bilinear_sample(const FeatureMap& map, Real u, Real v, std::span<Real> out) {
  require(out.size() == static_cast<std::size_t>(map.channels), ErrorCode::kShapeMismatch,
          "bilinear_sample: output size");
  const BilinearTap t = bilinear_tap(map.width, map.height, u, v);
  const Real w00 = (1 - t.fx) * (1 - t.fy), w10 = t.fx * (1 - t.fy), w01 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
  const Real* a = &map.data[map.index(t.x0, t.y0)];
  const Real* b = &map.data[map.index(t.x1, t.y0)];
  const Real* c = &map.data[map.index(t.x0, t.y1)];
  const Real* d = &map.data[map.index(t.x1, t.y1)];
  for (int k = 0; k < map.channels; ++k) out[k] = w00 * a[k] + w10 * b[k] + w01 * c[k] + w11 * d[k];
}

std::vector<Real> bilinear_sample(const FeatureMap& map, Real u, Real v) {
  std::vector<Real> out(static_cast<std::size_t>(map.channels));
  bilinear_sample(map, u, v, out);
  return out;
}

void bilinear_sample_backward(const FeatureMap& map, Real u, Real v, std::span<const Real> grad_out,
                              std::span<Real> grad_map, Real grad_uv[2]) {
  const BilinearTap t = bilinear_tap(map.width, map.height, u, v);
  const Real w00 = (1 - t.fx) * (1 - t.fy), w10 = t.fx * (1 - t.fy), w01 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
  const std::size_t i00 = map.index(t.x0, t.y0), i10 = map.index(t.x1, t.y0), i01 = map.index(t.x0, t.y1),
                    i11 = map.index(t.x1, t.y1);
  Real gu = 0, gv = 0;
  for (int k = 0; k < map.channels; ++k) {
    const Real g = grad_out[k];
    const Real a = map.data[i00 + k], b = map.data[i10 + k], c = map.data[i01 + k], d = map.data[i11 + k];
    gu += g * ((b - a) * (1 - t.fy) + (d - c) * t.fy);
    gv += g * ((c - a) * (1 - t.fx) + (d - b) * t.fx);
    if (!grad_map.empty()) {
      grad_map[i00 + k] += g * w00;
      grad_map[i10 + k] += g * w10;
      grad_map[i01 + k] += g * w01;
      grad_map[i11 + k] += g * w11;
    }
  }
  grad_uv[0] += t.clamped_x ? Real(0) : gu;
  grad_uv[1] += t.clamped_y ? Real(0) : gv;
}

G3D_NAMESPACE_END
