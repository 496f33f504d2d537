#include "g3d/render.hpp"

#include <cmath>

#include "g3d/error.hpp"
#include "g3d/ops.hpp"

G3D_NAMESPACE_BEGIN

namespace {

Real srgb(Real y) {
  return y <= Real(0.0031308) ? Real(12.92) * y : Real(1.055) * std::pow(y, Real(1) / Real(2.4)) - Real(0.055);
}

Real srgb_derivative(Real y) {
  return y <= Real(0.0031308) ? Real(12.92) : Real(1.055) / Real(2.4) * std::pow(y, Real(1) / Real(2.4) - 1);
}

struct Crossing {
  std::uint32_t a = 0, b = 0;  // vertex indices of the crossed edge
  Real tau = -1;
  // d tau / d(u, v) of both endpoints.
  Real da_u = 0, da_v = 0, db_u = 0, db_v = 0;
};

// Where the segment from the centre of pixel f to its neighbour (stepping +-1
// along `axis`) leaves triangle tri. Returns tau in [0, 1] or tau < 0.
Crossing find_crossing(const std::array<Projection, 3>& pr, const std::array<std::uint32_t, 3>& tri, Real fx,
                       Real fy, int axis, Real dir) {
  Crossing best;
  for (int e = 0; e < 3; ++e) {
    const Projection& A = pr[e];
    const Projection& B = pr[(e + 1) % 3];
    // Along axis 0 the segment has fixed v; along axis 1 fixed u.
    const Real Aw = axis == 0 ? A.u : A.v, Av = axis == 0 ? A.v : A.u;
    const Real Bw = axis == 0 ? B.u : B.v, Bv = axis == 0 ? B.v : B.u;
    const Real c_fixed = axis == 0 ? fy : fx;
    const Real c_along = axis == 0 ? fx : fy;
    const Real dv = Bv - Av;
    if (dv == 0) continue;
    const Real s = (c_fixed - Av) / dv;
    if (s < 0 || s > 1) continue;
    const Real xc = Aw + s * (Bw - Aw);
    const Real tau = (xc - c_along) * dir;
    if (tau < 0 || tau > 1 || tau <= best.tau) continue;
    best.tau = tau;
    best.a = tri[e];
    best.b = tri[(e + 1) % 3];
    const Real dw = Bw - Aw;
    const Real dA_w = (1 - s) * dir, dB_w = s * dir;
    const Real dA_v = dw * (s - 1) / dv * dir, dB_v = -dw * s / dv * dir;
    if (axis == 0) {
      best.da_u = dA_w;
      best.da_v = dA_v;
      best.db_u = dB_w;
      best.db_v = dB_v;
    } else {
      best.da_v = dA_w;
      best.da_u = dA_v;
      best.db_v = dB_w;
      best.db_u = dB_v;
    }
  }
  return best;
}

struct Blend {
  std::uint32_t f, b;  // foreground and background pixel
  Crossing c;
};

}  // namespace

Real tonemap_value(Real x) { return srgb(std::max(x, Real(0)) / (1 + std::max(x, Real(0)))); }

Var tonemap(Tape& tape, Var radiance) {
  auto r = tape.value(radiance);
  std::vector<Real> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = tonemap_value(r[i]);
  return tape.record(std::move(out), {radiance}, [radiance](Tape& t, Var self) {
    auto g = t.grad(self);
    auto r = t.value(radiance);
    auto gr = t.grad(radiance);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (r[i] <= 0) continue;
      const Real y = r[i] / (1 + r[i]);
      gr[i] += g[i] * srgb_derivative(y) / ((1 + r[i]) * (1 + r[i]));
    }
  });
}

Var composite(Tape& tape, Var values, std::shared_ptr<const GBuffer> gbuf, std::span<const Real> background) {
  const int C = static_cast<int>(background.size());
  const std::size_t n = gbuf->covered.size();
  require(tape.size(values) == n * C, ErrorCode::kShapeMismatch, "composite: value count");
  auto v = tape.value(values);
  std::vector<Real> out(gbuf->pixel_count() * C);
  for (std::size_t p = 0; p < gbuf->pixel_count(); ++p)
    for (int c = 0; c < C; ++c) out[p * C + c] = background[c];
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(gbuf->covered[i]) * C + c] = v[i * C + c];
  return tape.record(std::move(out), {values}, [values, gbuf, C](Tape& t, Var self) {
    auto g = t.grad(self);
    auto gv = t.grad(values);
    for (std::size_t i = 0; i < gbuf->covered.size(); ++i)
      for (int c = 0; c < C; ++c) gv[i * C + c] += g[static_cast<std::size_t>(gbuf->covered[i]) * C + c];
  });
}

Var antialias(Tape& tape, Var image, int channels, std::shared_ptr<const GBuffer> gbuf, const CameraView& cam,
              Var positions, std::shared_ptr<const TriangleList> triangles) {
  const int W = gbuf->width, H = gbuf->height, C = channels;
  require(tape.size(image) == gbuf->pixel_count() * C, ErrorCode::kShapeMismatch, "antialias: image size");
  auto P = tape.value(positions);
  auto img = tape.value(image);
  auto blends = std::make_shared<std::vector<Blend>>();
  auto vertex = [&P](std::uint32_t i) { return Vec3{P[3 * i], P[3 * i + 1], P[3 * i + 2]}; };
  auto pair = [&](std::uint32_t p, std::uint32_t q, int axis) {
    const bool cp = gbuf->tri[p] >= 0, cq = gbuf->tri[q] >= 0;
    if (cp == cq) return;
    const std::uint32_t f = cp ? p : q, b = cp ? q : p;
    const auto& tri = (*triangles)[static_cast<std::size_t>(gbuf->tri[f])];
    const std::array<Projection, 3> pr{project_point(cam, vertex(tri[0])), project_point(cam, vertex(tri[1])),
                                       project_point(cam, vertex(tri[2]))};
    const Real fx = static_cast<Real>(f % W) + Real(0.5), fy = static_cast<Real>(f / W) + Real(0.5);
    const Real dir = (axis == 0 ? static_cast<Real>(b % W) - static_cast<Real>(f % W)
                                : static_cast<Real>(b / W) - static_cast<Real>(f / W));
    const Crossing c = find_crossing(pr, tri, fx, fy, axis, dir);
    if (c.tau < 0) return;
    blends->push_back({f, b, c});
  };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::uint32_t p = static_cast<std::uint32_t>(y * W + x);
      if (x + 1 < W) pair(p, p + 1, 0);
      if (y + 1 < H) pair(p, p + W, 1);
    }
  std::vector<Real> out(img.begin(), img.end());
  for (const Blend& bl : *blends) {
    const Real tau = bl.c.tau;
    const Real* vf = img.data() + static_cast<std::size_t>(bl.f) * C;
    const Real* vb = img.data() + static_cast<std::size_t>(bl.b) * C;
    if (tau < Real(0.5)) {
      for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(bl.f) * C + c] += (Real(0.5) - tau) * (vb[c] - vf[c]);
    } else {
      for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(bl.b) * C + c] += (tau - Real(0.5)) * (vf[c] - vb[c]);
    }
  }
  return tape.record(std::move(out), {image, positions}, [image, positions, blends, C, cam](Tape& t, Var self) {
    auto g = t.grad(self);
    auto img = t.value(image);
    auto P = t.value(positions);
    const bool want_i = t.requires_grad(image), want_p = t.requires_grad(positions);
    std::span<Real> gi = want_i ? t.grad(image) : std::span<Real>{};
    std::span<Real> gp = want_p ? t.grad(positions) : std::span<Real>{};
    if (want_i)
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    for (const Blend& bl : *blends) {
      const Real tau = bl.c.tau;
      const std::size_t f = static_cast<std::size_t>(bl.f) * C, b = static_cast<std::size_t>(bl.b) * C;
      Real g_tau = 0;
      if (tau < Real(0.5)) {
        const Real a = Real(0.5) - tau;
        for (int c = 0; c < C; ++c) {
          if (want_i) {
            gi[f + c] -= a * g[f + c];
            gi[b + c] += a * g[f + c];
          }
          g_tau -= g[f + c] * (img[b + c] - img[f + c]);
        }
      } else {
        const Real a = tau - Real(0.5);
        for (int c = 0; c < C; ++c) {
          if (want_i) {
            gi[b + c] -= a * g[b + c];
            gi[f + c] += a * g[b + c];
          }
          g_tau += g[b + c] * (img[f + c] - img[b + c]);
        }
      }
      if (!want_p || g_tau == 0) continue;
      for (int k = 0; k < 2; ++k) {
        const std::uint32_t vi = k == 0 ? bl.c.a : bl.c.b;
        const Real du = k == 0 ? bl.c.da_u : bl.c.db_u, dv = k == 0 ? bl.c.da_v : bl.c.db_v;
        std::array<Vec3, 2> J;
        project_point(cam, Vec3{P[3 * vi], P[3 * vi + 1], P[3 * vi + 2]}, J);
        const Vec3 gv = (J[0] * du + J[1] * dv) * g_tau;
        gp[3 * vi] += gv.x;
        gp[3 * vi + 1] += gv.y;
        gp[3 * vi + 2] += gv.z;
      }
    }
  });
}

RenderOutput render_view(Tape& tape, const SceneGeometry& scene, const MaterialFn& material, Var env_texels,
                         const EnvLayout& layout, const CameraView& cam, const RenderSettings& settings) {
  auto P = tape.value(scene.positions);
  std::vector<Vec3> pts(P.size() / 3);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {P[3 * i], P[3 * i + 1], P[3 * i + 2]};
  auto gbuf = std::make_shared<const GBuffer>(rasterize(pts, *scene.triangles, cam));

  RenderOutput out;
  out.width = cam.width;
  out.height = cam.height;
  out.gbuf = gbuf;
  const Var geom = pixel_geometry(tape, cam, gbuf, scene.positions, scene.normals, scene.triangles);
  const Var points = columns(tape, geom, 9, 0, 3);
  const Var mat = material(tape, points);
  const Var sn = shading_normals(tape, geom, mat);
  out.radiance = shade(tape, cam, geom, sn, mat, env_texels, layout, settings.shading);

  const Real bg[3] = {settings.background.x, settings.background.y, settings.background.z};
  const Real nbg[3] = {settings.normal_background.x, settings.normal_background.y, settings.normal_background.z};
  const Real empty[1] = {0};
  Var rgb = composite(tape, tonemap(tape, out.radiance), gbuf, bg);
  Var nrm = composite(tape, scale_shift(tape, columns(tape, geom, 9, 3, 3), Real(0.5), Real(0.5)), gbuf, nbg);
  Var mask = composite(tape, tape.constant(std::vector<Real>(gbuf->covered.size(), 1)), gbuf, empty);
  if (settings.antialias) {
    rgb = antialias(tape, rgb, 3, gbuf, cam, scene.positions, scene.triangles);
    nrm = antialias(tape, nrm, 3, gbuf, cam, scene.positions, scene.triangles);
    mask = antialias(tape, mask, 1, gbuf, cam, scene.positions, scene.triangles);
  }
  out.rgb = rgb;
  out.normal = nrm;
  out.mask = mask;
  return out;
}

G3D_NAMESPACE_END
