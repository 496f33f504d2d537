#include "g3d/raster.hpp"

#include <cmath>
#include <limits>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

GBuffer rasterize(std::span<const Vec3> positions, std::span<const std::array<std::uint32_t, 3>> triangles,
                  const CameraView& cam) {
  GBuffer g;
  g.width = cam.width;
  g.height = cam.height;
  g.tri.assign(g.pixel_count(), -1);
  g.depth.assign(g.pixel_count(), std::numeric_limits<Real>::infinity());

  std::vector<Projection> proj(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) proj[i] = project_point(cam, positions[i]);

  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    const Projection& a = proj[tri[0]];
    const Projection& b = proj[tri[1]];
    const Projection& c = proj[tri[2]];
    if (a.behind || b.behind || c.behind) continue;
    // Edge functions in double so that coverage along shared edges is exact
    // to the same rounding for both neighbouring triangles.
    const double ax = a.u, ay = a.v, bx = b.u, by = b.v, cx = c.u, cy = c.v;
    const double area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    if (area == 0 || !std::isfinite(area)) continue;
    const double sign = area > 0 ? 1.0 : -1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}) - 0.5)));
    const int x1 = std::min(g.width - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}) - 0.5)));
    const int y1 = std::min(g.height - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}) - 0.5)));
    const double inv_area = 1.0 / area;
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = ((bx - px) * (cy - py) - (by - py) * (cx - px)) * sign;
        const double w1 = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) * sign;
        const double w2 = ((ax - px) * (by - py) - (ay - py) * (bx - px)) * sign;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        // Perspective-correct depth from screen-space barycentrics.
        const double l0 = w0 * sign * inv_area, l1 = w1 * sign * inv_area, l2 = w2 * sign * inv_area;
        const double inv_d = l0 / a.depth + l1 / b.depth + l2 / c.depth;
        const Real d = static_cast<Real>(1.0 / inv_d);
        const std::size_t p = static_cast<std::size_t>(y) * g.width + x;
        if (d < g.depth[p]) {
          g.depth[p] = d;
          g.tri[p] = static_cast<std::int32_t>(t);
        }
      }
    }
  }
  g.slot.assign(g.pixel_count(), -1);
  for (std::size_t p = 0; p < g.pixel_count(); ++p)
    if (g.tri[p] >= 0) {
      g.slot[p] = static_cast<std::int32_t>(g.covered.size());
      g.covered.push_back(static_cast<std::uint32_t>(p));
    }
  return g;
}

G3D_NAMESPACE_END
