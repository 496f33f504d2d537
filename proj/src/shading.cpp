#include "g3d/shading.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

Vec3 load3(std::span<const Real> v, std::size_t i) { return {v[3 * i], v[3 * i + 1], v[3 * i + 2]}; }
Vec3 load3(std::span<const Real> v, std::size_t row, int stride, int offset) {
  const std::size_t b = row * stride + offset;
  return {v[b], v[b + 1], v[b + 2]};
}
void add3(std::span<Real> v, std::size_t row, int stride, int offset, const Vec3& g) {
  const std::size_t b = row * stride + offset;
  v[b] += g.x;
  v[b + 1] += g.y;
  v[b + 2] += g.z;
}
void store3(std::vector<Real>& v, std::size_t row, int stride, int offset, const Vec3& x) {
  const std::size_t b = row * stride + offset;
  v[b] = x.x;
  v[b + 1] = x.y;
  v[b + 2] = x.z;
}

constexpr double kGoldenFraction = 0.61803398874989484820;

// Gradient of the basis vectors with respect to the normal, for the branch
// selected by sign(n.z).
Vec3 basis_backward(const Vec3& n, const Vec3& g1, const Vec3& g2) {
  const Real s = std::copysign(Real(1), n.z);
  const Real a = Real(-1) / (s + n.z);
  const Real a2 = a * a;
  Vec3 g;
  g.x = g1.x * 2 * s * n.x * a + g1.y * s * n.y * a - g1.z * s + g2.x * n.y * a;
  g.y = g1.y * s * n.x * a + g2.x * n.x * a + g2.y * 2 * n.y * a - g2.z;
  g.z = (g1.x * s * n.x * n.x + g1.y * s * n.x * n.y + g2.x * n.x * n.y + g2.y * n.y * n.y) * a2;
  return g;
}

struct PixelInputs {
  Vec3 x, n, eye;
  Vec3 kd;
  Real o, r, m;
};

struct SmithTerms {
  Real G, dnl, dnv, da2;
};

SmithTerms smith_with_derivatives(Real nl, Real nv, Real a2) {
  const Real sl = std::sqrt(a2 + (1 - a2) * nl * nl);
  const Real sv = std::sqrt(a2 + (1 - a2) * nv * nv);
  const Real den = nv * sl + nl * sv;
  SmithTerms t;
  t.G = 2 * nl * nv / den;
  const Real dsl_dnl = (1 - a2) * nl / sl, dsv_dnv = (1 - a2) * nv / sv;
  const Real dsl_da2 = (1 - nl * nl) / (2 * sl), dsv_da2 = (1 - nv * nv) / (2 * sv);
  t.dnl = 2 * nv / den - t.G / den * (nv * dsl_dnl + sv);
  t.dnv = 2 * nl / den - t.G / den * (sl + nl * dsv_dnv);
  t.da2 = -t.G / den * (nv * dsl_da2 + nl * dsv_da2);
  return t;
}

constexpr Real kMinViewCosine = Real(1e-4);

Vec3 shade_forward(const PixelInputs& p, const EnvLayout& layout, std::span<const Real> env,
                   const ShadingOptions& opt) {
  Vec3 b1, b2;
  orthonormal_basis(p.n, b1, b2);
  Vec3 inner;
  if (opt.diffuse) {
    const auto& dirs = diffuse_directions(opt.diffuse_samples);
    Vec3 ed;
    for (const Vec3& dl : dirs) ed += env_radiance(layout, env, b1 * dl.x + b2 * dl.y + p.n * dl.z);
    ed *= Real(1) / static_cast<Real>(dirs.size());
    inner += mul(p.kd, ed) * (1 - p.m);
  }
  const Vec3 wo = normalize(p.eye - p.x);
  const Real nv = dot(p.n, wo);
  if (opt.specular && nv > kMinViewCosine) {
    const Real alpha = p.r * p.r, a2 = alpha * alpha;
    const Vec3 f0 = specular_color(p.kd, p.m);
    const auto& pairs = specular_pairs(opt.specular_samples);
    const Real inv_n = Real(1) / static_cast<Real>(pairs.size());
    for (const auto& [u1, phi] : pairs) {
      const Real q = u1 / (1 - u1);
      const Real c = 1 / std::sqrt(1 + a2 * q);
      const Real s = c * std::sqrt(a2 * q);
      const Vec3 h = b1 * (s * std::cos(phi)) + b2 * (s * std::sin(phi)) + p.n * c;
      const Real woh = dot(wo, h);
      if (woh <= 0) continue;
      const Vec3 l = h * (2 * woh) - wo;
      const Real nl = dot(p.n, l);
      if (nl <= 0) continue;
      const Real G = smith_g2(nl, nv, alpha);
      const Vec3 F = fresnel_schlick(f0, woh);
      const Real w = G * woh / (nv * c);
      inner += mul(env_radiance(layout, env, l), F) * (w * inv_n);
    }
  }
  return inner * p.o;
}

struct PixelGrads {
  Vec3 x, n, kd;
  Real o = 0, r = 0, m = 0;
};

void shade_backward(const PixelInputs& p, const Vec3& gR, const EnvLayout& layout, std::span<const Real> env,
                    const ShadingOptions& opt, PixelGrads& out, std::span<Real> genv) {
  Vec3 b1, b2;
  orthonormal_basis(p.n, b1, b2);
  Vec3 g_b1, g_b2, g_n;
  const Vec3 g_in = gR * p.o;
  Vec3 inner;
  if (opt.diffuse) {
    const auto& dirs = diffuse_directions(opt.diffuse_samples);
    const Real inv_n = Real(1) / static_cast<Real>(dirs.size());
    Vec3 ed;
    std::vector<EnvTap> taps(dirs.size());
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      taps[j] = env_tap(layout, b1 * dirs[j].x + b2 * dirs[j].y + p.n * dirs[j].z);
      ed += env_radiance(layout, env, taps[j]);
    }
    ed *= inv_n;
    inner += mul(p.kd, ed) * (1 - p.m);
    out.kd += mul(g_in, ed) * (1 - p.m);
    out.m -= dot(g_in, mul(p.kd, ed));
    const Vec3 g_ed = mul(g_in, p.kd) * ((1 - p.m) * inv_n);
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      const Vec3 gl = env_radiance_backward(layout, env, taps[j], g_ed, genv);
      g_b1 += gl * dirs[j].x;
      g_b2 += gl * dirs[j].y;
      g_n += gl * dirs[j].z;
    }
  }
  const Vec3 wo_raw = p.eye - p.x;
  const Vec3 wo = normalize(wo_raw);
  const Real nv = dot(p.n, wo);
  Vec3 g_wo;
  if (opt.specular && nv > kMinViewCosine) {
    const Real alpha = p.r * p.r, a2 = alpha * alpha;
    const Vec3 f0 = specular_color(p.kd, p.m);
    const auto& pairs = specular_pairs(opt.specular_samples);
    const Real inv_n = Real(1) / static_cast<Real>(pairs.size());
    Vec3 g_f0;
    Real g_nv = 0, g_a2 = 0;
    for (const auto& [u1, phi] : pairs) {
      const Real q = u1 / (1 - u1);
      const Real c = 1 / std::sqrt(1 + a2 * q);
      const Real rq = std::sqrt(a2 * q);
      const Real s = c * rq;
      const Real cp = std::cos(phi), sp = std::sin(phi);
      const Vec3 hl{s * cp, s * sp, c};
      const Vec3 h = b1 * hl.x + b2 * hl.y + p.n * hl.z;
      const Real woh = dot(wo, h);
      if (woh <= 0) continue;
      const Vec3 l = h * (2 * woh) - wo;
      const Real nl = dot(p.n, l);
      if (nl <= 0) continue;
      const SmithTerms G = smith_with_derivatives(nl, nv, a2);
      const Real x = 1 - woh;
      const Real x4 = x * x * x * x, x5 = x4 * x;
      const Vec3 F = f0 + (Vec3{1, 1, 1} - f0) * x5;
      const Real w = G.G * woh / (nv * c);
      const EnvTap tap = env_tap(layout, l);
      const Vec3 L = env_radiance(layout, env, tap);
      inner += mul(L, F) * (w * inv_n);

      const Vec3 gL = mul(g_in, F) * (w * inv_n);
      const Vec3 gF = mul(g_in, L) * (w * inv_n);
      const Real gw = dot(g_in, mul(L, F)) * inv_n;
      Vec3 g_l = env_radiance_backward(layout, env, tap, gL, genv);
      g_f0 += gF * x5 * Real(-1) + gF;
      const Real g_x5 = dot(gF, Vec3{1, 1, 1} - f0);
      Real g_woh = -5 * x4 * g_x5;
      const Real g_G = gw * woh / (nv * c);
      g_woh += gw * G.G / (nv * c);
      g_nv -= gw * w / nv;
      const Real g_c_direct = -gw * w / c;
      const Real g_nl = g_G * G.dnl;
      g_nv += g_G * G.dnv;
      g_a2 += g_G * G.da2;
      g_n += l * g_nl;
      g_l += p.n * g_nl;
      g_woh += 2 * dot(g_l, h);
      Vec3 g_h = g_l * (2 * woh);
      g_wo -= g_l;
      g_wo += h * g_woh;
      g_h += wo * g_woh;
      g_b1 += g_h * hl.x;
      g_b2 += g_h * hl.y;
      g_n += g_h * hl.z;
      const Real g_s = dot(b1, g_h) * cp + dot(b2, g_h) * sp;
      const Real g_c = dot(p.n, g_h) + g_c_direct;
      const Real dc_da2 = -q * c * c * c / 2;
      const Real ds_da2 = c * q / (2 * rq) + rq * dc_da2;
      g_a2 += g_s * ds_da2 + g_c * dc_da2;
    }
    g_n += wo * g_nv;
    g_wo += p.n * g_nv;
    out.r += g_a2 * 4 * p.r * p.r * p.r;
    out.m += dot(g_f0, p.kd - Vec3{Real(0.04), Real(0.04), Real(0.04)});
    out.kd += g_f0 * p.m;
  }
  out.o += dot(gR, inner);
  g_n += basis_backward(p.n, g_b1, g_b2);
  out.n += g_n;
  out.x -= normalize_backward(wo_raw, g_wo);
}

}  // namespace

const std::vector<Vec3>& diffuse_directions(int count) {
  static std::mutex mu;
  static std::map<int, std::vector<Vec3>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& dirs = cache[count];
  if (dirs.empty()) {
    require(count >= 1, ErrorCode::kInvalidArgument, "diffuse sample count must be positive");
    for (int j = 0; j < count; ++j) {
      const double u = (j + 0.5) / count;
      const double phi = 2 * kPi * std::fmod(j * kGoldenFraction, 1.0);
      const double r = std::sqrt(u);
      dirs.push_back({static_cast<Real>(r * std::cos(phi)), static_cast<Real>(r * std::sin(phi)),
                      static_cast<Real>(std::sqrt(1 - u))});
    }
  }
  return dirs;
}

const std::vector<std::array<Real, 2>>& specular_pairs(int count) {
  static std::mutex mu;
  static std::map<int, std::vector<std::array<Real, 2>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& pairs = cache[count];
  if (pairs.empty()) {
    require(count >= 1, ErrorCode::kInvalidArgument, "specular sample count must be positive");
    for (int j = 0; j < count; ++j)
      pairs.push_back({static_cast<Real>((j + 0.5) / count),
                       static_cast<Real>(2 * kPi * std::fmod(j * kGoldenFraction, 1.0))});
  }
  return pairs;
}

void orthonormal_basis(const Vec3& n, Vec3& b1, Vec3& b2) {
  const Real s = std::copysign(Real(1), n.z);
  const Real a = Real(-1) / (s + n.z);
  const Real b = n.x * n.y * a;
  b1 = {1 + s * n.x * n.x * a, s * b, -s * n.x};
  b2 = {b, s + n.y * n.y * a, -n.y};
}

Var activate_material(Tape& tape, Var raw) {
  auto r = tape.value(raw);
  require(r.size() % material::kChannels == 0, ErrorCode::kShapeMismatch, "material: expected 9 channels");
  std::vector<Real> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const int c = static_cast<int>(i % material::kChannels);
    if (c >= material::kKn) out[i] = std::tanh(r[i]);
    else if (c == material::kRoughness) out[i] = kMinRoughness + (1 - kMinRoughness) * sigmoid(r[i]);
    else out[i] = sigmoid(r[i]);
  }
  return tape.record(std::move(out), {raw}, [raw](Tape& t, Var self) {
    auto g = t.grad(self);
    auto y = t.value(self);
    auto gr = t.grad(raw);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int c = static_cast<int>(i % material::kChannels);
      Real d;
      if (c >= material::kKn) d = 1 - y[i] * y[i];
      else if (c == material::kRoughness) {
        const Real s = (y[i] - kMinRoughness) / (1 - kMinRoughness);
        d = (1 - kMinRoughness) * s * (1 - s);
      } else d = y[i] * (1 - y[i]);
      gr[i] += g[i] * d;
    }
  });
}

std::vector<Real> constant_material(const MaterialSample& m, std::size_t n) {
  std::vector<Real> out(n * material::kChannels);
  for (std::size_t i = 0; i < n; ++i) {
    Real* o = out.data() + i * material::kChannels;
    o[0] = m.kd.x;
    o[1] = m.kd.y;
    o[2] = m.kd.z;
    o[3] = m.occlusion;
    o[4] = m.roughness;
    o[5] = m.metalness;
    o[6] = m.kn.x;
    o[7] = m.kn.y;
    o[8] = m.kn.z;
  }
  return out;
}

Var pixel_geometry(Tape& tape, const CameraView& cam, std::shared_ptr<const GBuffer> gbuf_ptr, Var positions,
                   Var normals, std::shared_ptr<const TriangleList> tris) {
  const GBuffer& gbuf = *gbuf_ptr;
  const TriangleList& triangles = *tris;
  const std::size_t n = gbuf.covered.size();
  auto P = tape.value(positions);
  auto N = tape.value(normals);
  require(P.size() == N.size(), ErrorCode::kShapeMismatch, "pixel_geometry: positions and normals differ in size");
  const Vec3 eye = cam.position();
  std::vector<Real> out(n * 9);
  // Barycentrics per pixel, reused by the backward pass.
  auto bary = std::make_shared<std::vector<std::array<Real, 4>>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t pix = gbuf.covered[i];
    const auto& tri = triangles[static_cast<std::size_t>(gbuf.tri[pix])];
    const Vec3 d = cam.ray_direction(static_cast<Real>(pix % gbuf.width) + Real(0.5),
                                     static_cast<Real>(pix / gbuf.width) + Real(0.5));
    const Vec3 p0 = load3(P, tri[0]), p1 = load3(P, tri[1]), p2 = load3(P, tri[2]);
    const Vec3 a0 = p0 - eye, a1 = p1 - eye, a2 = p2 - eye;
    Real v0 = dot(a1, cross(a2, d)), v1 = dot(a2, cross(a0, d)), v2 = dot(a0, cross(a1, d));
    Real S = v0 + v1 + v2;
    bool degenerate = !(std::abs(S) > Real(1e-20));
    if (degenerate) {
      v0 = v1 = v2 = Real(1) / 3;
      S = 1;
    }
    const Real b0 = v0 / S, b1 = v1 / S, b2 = v2 / S;
    (*bary)[i] = {b0, b1, b2, degenerate ? Real(1) : Real(0)};
    const Vec3 x = p0 * b0 + p1 * b1 + p2 * b2;
    const Vec3 ns = load3(N, tri[0]) * b0 + load3(N, tri[1]) * b1 + load3(N, tri[2]) * b2;
    const Vec3 nn = norm(ns) > 0 ? normalize(ns) : Vec3{0, 0, 1};
    const Vec3 e0 = p1 - p0;
    Vec3 tr = e0 - nn * dot(e0, nn);
    Vec3 t = norm(tr) > 0 ? normalize(tr) : Vec3{};
    if (norm(tr) == 0) {
      Vec3 bb;
      orthonormal_basis(nn, t, bb);
    }
    store3(out, i, 9, 0, x);
    store3(out, i, 9, 3, nn);
    store3(out, i, 9, 6, t);
  }
  return tape.record(std::move(out), {positions, normals},
                     [cam, gbuf_ptr, tris, positions, normals, bary, eye](Tape& t, Var self) {
    const GBuffer& gbuf = *gbuf_ptr;
    const TriangleList& triangles = *tris;
    auto g = t.grad(self);
    auto P = t.value(positions);
    auto N = t.value(normals);
    const bool want_p = t.requires_grad(positions), want_n = t.requires_grad(normals);
    std::span<Real> gP = want_p ? t.grad(positions) : std::span<Real>{};
    std::span<Real> gN = want_n ? t.grad(normals) : std::span<Real>{};
    for (std::size_t i = 0; i < gbuf.covered.size(); ++i) {
      const Vec3 gx = load3(g, i, 9, 0), gn = load3(g, i, 9, 3), gt = load3(g, i, 9, 6);
      if (gx == Vec3{} && gn == Vec3{} && gt == Vec3{}) continue;
      const std::uint32_t pix = gbuf.covered[i];
      const auto& tri = triangles[static_cast<std::size_t>(gbuf.tri[pix])];
      const auto [b0, b1, b2, degenerate] = (*bary)[i];
      const Real b[3] = {b0, b1, b2};
      const Vec3 p[3] = {load3(P, tri[0]), load3(P, tri[1]), load3(P, tri[2])};
      const Vec3 nv[3] = {load3(N, tri[0]), load3(N, tri[1]), load3(N, tri[2])};
      const Vec3 ns = nv[0] * b0 + nv[1] * b1 + nv[2] * b2;
      if (norm(ns) == 0) continue;
      const Vec3 nn = normalize(ns);
      const Vec3 e0 = p[1] - p[0];
      const Real e0n = dot(e0, nn);
      const Vec3 tr = e0 - nn * e0n;
      Vec3 gp[3], g_nn = gn;
      Real gb[3] = {0, 0, 0};
      if (norm(tr) > 0) {
        const Vec3 g_tr = normalize_backward(tr, gt);
        const Vec3 g_e0 = g_tr - nn * dot(nn, g_tr);
        g_nn -= g_tr * e0n + e0 * dot(nn, g_tr);
        gp[1] += g_e0;
        gp[0] -= g_e0;
      }
      const Vec3 g_ns = normalize_backward(ns, g_nn);
      for (int k = 0; k < 3; ++k) {
        if (want_n) add3(gN, tri[k], 3, 0, g_ns * b[k]);
        gb[k] += dot(nv[k], g_ns);
        gp[k] += gx * b[k];
        gb[k] += dot(p[k], gx);
      }
      if (!want_p) continue;
      if (degenerate == 0) {
        const Vec3 d = cam.ray_direction(static_cast<Real>(pix % gbuf.width) + Real(0.5),
                                         static_cast<Real>(pix / gbuf.width) + Real(0.5));
        const Vec3 a[3] = {p[0] - eye, p[1] - eye, p[2] - eye};
        const Real v[3] = {dot(a[1], cross(a[2], d)), dot(a[2], cross(a[0], d)), dot(a[0], cross(a[1], d))};
        const Real S = v[0] + v[1] + v[2];
        const Real mix = gb[0] * b[0] + gb[1] * b[1] + gb[2] * b[2];
        Real gv[3];
        for (int k = 0; k < 3; ++k) gv[k] = (gb[k] - mix) / S;
        gp[1] += cross(a[2], d) * gv[0];
        gp[2] += cross(d, a[1]) * gv[0];
        gp[2] += cross(a[0], d) * gv[1];
        gp[0] += cross(d, a[2]) * gv[1];
        gp[0] += cross(a[1], d) * gv[2];
        gp[1] += cross(d, a[0]) * gv[2];
      }
      for (int k = 0; k < 3; ++k) add3(gP, tri[k], 3, 0, gp[k]);
    }
  });
}

Var shading_normals(Tape& tape, Var geometry, Var material) {
  auto G = tape.value(geometry);
  auto M = tape.value(material);
  const std::size_t n = G.size() / 9;
  require(M.size() == n * material::kChannels, ErrorCode::kShapeMismatch, "shading_normals: material size");
  std::vector<Real> out(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 ng = load3(G, i, 9, 3), t = load3(G, i, 9, 6), kn = load3(M, i, material::kChannels, material::kKn);
    const Vec3 raw = ng * (1 + Real(0.5) * kn.z) + t * (Real(0.5) * kn.x) + cross(ng, t) * (Real(0.5) * kn.y);
    const Vec3 s = norm(raw) > 0 ? normalize(raw) : ng;
    store3(out, i, 3, 0, s);
  }
  return tape.record(std::move(out), {geometry, material}, [geometry, material, n](Tape& t, Var self) {
    auto g = t.grad(self);
    auto G = t.value(geometry);
    auto M = t.value(material);
    const bool want_g = t.requires_grad(geometry), want_m = t.requires_grad(material);
    std::span<Real> gG = want_g ? t.grad(geometry) : std::span<Real>{};
    std::span<Real> gM = want_m ? t.grad(material) : std::span<Real>{};
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 gs = load3(g, i, 3, 0);
      if (gs == Vec3{}) continue;
      const Vec3 ng = load3(G, i, 9, 3), tt = load3(G, i, 9, 6),
                 kn = load3(M, i, material::kChannels, material::kKn);
      const Vec3 bt = cross(ng, tt);
      const Vec3 raw = ng * (1 + Real(0.5) * kn.z) + tt * (Real(0.5) * kn.x) + bt * (Real(0.5) * kn.y);
      if (norm(raw) == 0) continue;
      const Vec3 gr = normalize_backward(raw, gs);
      if (want_m) add3(gM, i, material::kChannels, material::kKn, Vec3{dot(gr, tt), dot(gr, bt), dot(gr, ng)} * Real(0.5));
      if (want_g) {
        const Vec3 gb = gr * (Real(0.5) * kn.y);
        add3(gG, i, 9, 3, gr * (1 + Real(0.5) * kn.z) + cross(tt, gb));
        add3(gG, i, 9, 6, gr * (Real(0.5) * kn.x) + cross(gb, ng));
      }
    }
  });
}

Var shade(Tape& tape, const CameraView& cam, Var geometry, Var normals, Var material, Var env_texels,
          const EnvLayout& layout, const ShadingOptions& options) {
  auto G = tape.value(geometry);
  auto Ns = tape.value(normals);
  auto M = tape.value(material);
  auto E = tape.value(env_texels);
  const std::size_t n = G.size() / 9;
  require(Ns.size() == 3 * n && M.size() == n * material::kChannels, ErrorCode::kShapeMismatch,
          "shade: buffer sizes disagree");
  require(E.size() == layout.value_count(), ErrorCode::kShapeMismatch, "shade: environment size");
  const Vec3 eye = cam.position();
  auto inputs_at = [eye](std::span<const Real> G, std::span<const Real> Ns, std::span<const Real> M, std::size_t i) {
    const Real* m = M.data() + i * material::kChannels;
    return PixelInputs{load3(G, i, 9, 0), load3(Ns, i, 3, 0), eye, {m[0], m[1], m[2]}, m[3], m[4], m[5]};
  };
  std::vector<Real> out(3 * n);
  for (std::size_t i = 0; i < n; ++i) store3(out, i, 3, 0, shade_forward(inputs_at(G, Ns, M, i), layout, E, options));
  return tape.record(std::move(out), {geometry, normals, material, env_texels},
                     [geometry, normals, material, env_texels, layout, options, inputs_at, n](Tape& t, Var self) {
    auto g = t.grad(self);
    auto G = t.value(geometry);
    auto Ns = t.value(normals);
    auto M = t.value(material);
    auto E = t.value(env_texels);
    std::span<Real> gG = t.requires_grad(geometry) ? t.grad(geometry) : std::span<Real>{};
    std::span<Real> gN = t.requires_grad(normals) ? t.grad(normals) : std::span<Real>{};
    std::span<Real> gM = t.requires_grad(material) ? t.grad(material) : std::span<Real>{};
    std::span<Real> gE = t.requires_grad(env_texels) ? t.grad(env_texels) : std::span<Real>{};
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 gR = load3(g, i, 3, 0);
      if (gR == Vec3{}) continue;
      PixelGrads pg;
      shade_backward(inputs_at(G, Ns, M, i), gR, layout, E, options, pg, gE);
      if (!gG.empty()) add3(gG, i, 9, 0, pg.x);
      if (!gN.empty()) add3(gN, i, 3, 0, pg.n);
      if (!gM.empty()) {
        Real* m = gM.data() + i * material::kChannels;
        m[0] += pg.kd.x;
        m[1] += pg.kd.y;
        m[2] += pg.kd.z;
        m[3] += pg.o;
        m[4] += pg.r;
        m[5] += pg.m;
      }
    }
  });
}

G3D_NAMESPACE_END
