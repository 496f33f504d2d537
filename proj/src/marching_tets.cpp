#include "g3d/marching_tets.hpp"

#include <bit>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

Vec3 midpoint(const TetGrid& g, std::uint32_t a, std::uint32_t b) {
  return (g.vertices[a] + g.vertices[b]) * Real(0.5);
}

Vec3 load3(std::span<const Real> v, std::size_t i) { return {v[3 * i], v[3 * i + 1], v[3 * i + 2]}; }

struct Builder {
  const TetGrid& grid;
  MtTopology topo;
  std::unordered_map<std::uint64_t, std::uint32_t> index;

  std::uint32_t vertex(std::uint32_t a, std::uint32_t b) {
    const auto [it, inserted] = index.try_emplace(edge_key(a, b), static_cast<std::uint32_t>(topo.edges.size()));
    if (inserted) topo.edges.push_back({std::min(a, b), std::max(a, b)});
    return it->second;
  }

  // Emits a triangle on edges e0, e1, e2, oriented away from `inside`. The
  // orientation test uses undeformed edge midpoints, so it depends only on
  // the sign pattern.
  void triangle(const std::array<std::array<std::uint32_t, 2>, 3>& e, std::uint32_t inside) {
    const Vec3 q0 = midpoint(grid, e[0][0], e[0][1]);
    const Vec3 q1 = midpoint(grid, e[1][0], e[1][1]);
    const Vec3 q2 = midpoint(grid, e[2][0], e[2][1]);
    const bool flip = det3(q1 - q0, q2 - q0, grid.vertices[inside] - q0) > 0;
    std::array<std::uint32_t, 3> t{vertex(e[0][0], e[0][1]), vertex(e[1][0], e[1][1]), vertex(e[2][0], e[2][1])};
    if (flip) std::swap(t[1], t[2]);
    topo.triangles.push_back(t);
  }
};

}  // namespace

Real crossing_parameter(Real sa, Real sb) {
  return clamp(sa / (sa - sb), kCrossingMargin, Real(1) - kCrossingMargin);
}

MtTopology extract_topology(const TetGrid& grid, std::span<const Real> sdf) {
  require(sdf.size() == grid.vertex_count(), ErrorCode::kShapeMismatch, "marching_tetrahedra: sdf size");
  for (Real s : sdf) require(std::isfinite(s), ErrorCode::kNonFinite, "marching_tetrahedra: non-finite sdf");
  Builder b{grid, {}, {}};
  for (const auto& tet : grid.tets) {
    int mask = 0;
    for (int i = 0; i < 4; ++i)
      if (sdf[tet[i]] <= 0) mask |= 1 << i;
    const int count = std::popcount(static_cast<unsigned>(mask));
    if (count == 0 || count == 4) continue;
    if (count == 1 || count == 3) {
      // The lone corner differs from the other three.
      const int lone_mask = count == 1 ? mask : (~mask & 0xF);
      const int lone = std::countr_zero(static_cast<unsigned>(lone_mask));
      std::array<std::uint32_t, 3> others{};
      for (int i = 0, k = 0; i < 4; ++i)
        if (i != lone) others[k++] = tet[i];
      const std::uint32_t l = tet[lone];
      const std::uint32_t inside = count == 1 ? l : others[0];
      b.triangle({{{l, others[0]}, {l, others[1]}, {l, others[2]}}}, inside);
    } else {
      std::array<std::uint32_t, 2> in{}, out{};
      for (int i = 0, ki = 0, ko = 0; i < 4; ++i) {
        if (mask & (1 << i)) in[ki++] = tet[i];
        else out[ko++] = tet[i];
      }
      const auto [a, bb] = in;
      const auto [c, d] = out;
      // Quad ac -> ad -> bd -> bc, split along ac-bd. Both halves share the
      // orientation of the first.
      const Vec3 q0 = midpoint(grid, a, c), q1 = midpoint(grid, a, d), q2 = midpoint(grid, bb, d);
      const bool flip = det3(q1 - q0, q2 - q0, grid.vertices[a] - q0) > 0;
      const std::uint32_t vac = b.vertex(a, c), vad = b.vertex(a, d), vbd = b.vertex(bb, d), vbc = b.vertex(bb, c);
      if (!flip) {
        b.topo.triangles.push_back({vac, vad, vbd});
        b.topo.triangles.push_back({vac, vbd, vbc});
      } else {
        b.topo.triangles.push_back({vac, vbd, vad});
        b.topo.triangles.push_back({vac, vbc, vbd});
      }
    }
  }
  return std::move(b.topo);
}

std::vector<Vec3> surface_positions(const TetGrid& grid, const MtTopology& topo, std::span<const Real> sdf,
                                    std::span<const Vec3> offsets) {
  std::vector<Vec3> out(topo.vertex_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [a, b] = topo.edges[i];
    Vec3 pa = grid.vertices[a], pb = grid.vertices[b];
    if (!offsets.empty()) {
      pa += offsets[a];
      pb += offsets[b];
    }
    out[i] = pa + (pb - pa) * crossing_parameter(sdf[a], sdf[b]);
  }
  return out;
}

TriMesh marching_tetrahedra(const TetGrid& grid, const GridState& state) {
  require(state.offset.empty() || state.offset.size() == grid.vertex_count(), ErrorCode::kShapeMismatch,
          "marching_tetrahedra: offset size");
  const MtTopology topo = extract_topology(grid, state.sdf);
  TriMesh mesh;
  mesh.positions = surface_positions(grid, topo, state.sdf, state.offset);
  mesh.triangles = topo.triangles;
  mesh.normals = compute_vertex_normals(mesh.positions, mesh.triangles);
  return mesh;
}

Var surface_positions(Tape& tape, const TetGrid& grid, std::shared_ptr<const MtTopology> topo_ptr, Var sdf,
                      Var offsets) {
  const MtTopology& topo = *topo_ptr;
  require(tape.size(sdf) == grid.vertex_count(), ErrorCode::kShapeMismatch, "surface_positions: sdf size");
  const bool has_offsets = offsets.valid();
  if (has_offsets)
    require(tape.size(offsets) == 3 * grid.vertex_count(), ErrorCode::kShapeMismatch,
            "surface_positions: offset size");
  auto s = tape.value(sdf);
  const std::size_t nv = topo.vertex_count();
  std::vector<Real> out(3 * nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const auto [a, b] = topo.edges[i];
    Vec3 pa = grid.vertices[a], pb = grid.vertices[b];
    if (has_offsets) {
      pa += load3(tape.value(offsets), a);
      pb += load3(tape.value(offsets), b);
    }
    const Vec3 p = pa + (pb - pa) * crossing_parameter(s[a], s[b]);
    out[3 * i] = p.x;
    out[3 * i + 1] = p.y;
    out[3 * i + 2] = p.z;
  }
  std::vector<Var> inputs{sdf};
  if (has_offsets) inputs.push_back(offsets);
  return tape.record(std::move(out), inputs, [&grid, topo_ptr, sdf, offsets, has_offsets](Tape& t, Var self) {
    const MtTopology& topo = *topo_ptr;
    auto g = t.grad(self);
    auto s = t.value(sdf);
    const bool want_s = t.requires_grad(sdf);
    const bool want_o = has_offsets && t.requires_grad(offsets);
    std::span<Real> gs = want_s ? t.grad(sdf) : std::span<Real>{};
    std::span<Real> go = want_o ? t.grad(offsets) : std::span<Real>{};
    for (std::size_t i = 0; i < topo.vertex_count(); ++i) {
      const Vec3 gp = load3(g, i);
      if (gp.x == 0 && gp.y == 0 && gp.z == 0) continue;
      const auto [a, b] = topo.edges[i];
      const Real sa = s[a], sb = s[b];
      const Real raw = sa / (sa - sb);
      const Real tt = crossing_parameter(sa, sb);
      if (want_s && raw > kCrossingMargin && raw < Real(1) - kCrossingMargin) {
        Vec3 pa = grid.vertices[a], pb = grid.vertices[b];
        if (has_offsets) {
          pa += load3(t.value(offsets), a);
          pb += load3(t.value(offsets), b);
        }
        const Real gt = dot(gp, pb - pa);
        const Real den = (sa - sb) * (sa - sb);
        gs[a] += gt * (-sb / den);
        gs[b] += gt * (sa / den);
      }
      if (want_o) {
        for (int c = 0; c < 3; ++c) {
          go[3 * a + c] += (1 - tt) * gp[c];
          go[3 * b + c] += tt * gp[c];
        }
      }
    }
  });
}

Var vertex_normals(Tape& tape, Var positions, std::shared_ptr<const TriangleList> tris) {
  const TriangleList& triangles = *tris;
  auto p = tape.value(positions);
  const std::size_t nv = p.size() / 3;
  auto acc = std::make_shared<std::vector<Vec3>>(nv);
  for (const auto& tri : triangles) {
    const Vec3 a = load3(p, tri[0]), b = load3(p, tri[1]), c = load3(p, tri[2]);
    const Vec3 fn = cross(b - a, c - a);
    for (auto v : tri) (*acc)[v] += fn;
  }
  std::vector<Real> out(3 * nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec3& a = (*acc)[i];
    const Vec3 n = norm(a) > 0 ? normalize(a) : Vec3{0, 0, 1};
    out[3 * i] = n.x;
    out[3 * i + 1] = n.y;
    out[3 * i + 2] = n.z;
  }
  return tape.record(std::move(out), {positions}, [positions, acc, tris](Tape& t, Var self) {
    const TriangleList& triangles = *tris;
    auto g = t.grad(self);
    auto p = t.value(positions);
    auto gp = t.grad(positions);
    const std::size_t nv = acc->size();
    std::vector<Vec3> ga(nv);
    for (std::size_t i = 0; i < nv; ++i) ga[i] = normalize_backward((*acc)[i], load3(g, i));
    for (const auto& tri : triangles) {
      const Vec3 gfn = ga[tri[0]] + ga[tri[1]] + ga[tri[2]];
      if (gfn.x == 0 && gfn.y == 0 && gfn.z == 0) continue;
      const Vec3 a = load3(p, tri[0]), b = load3(p, tri[1]), c = load3(p, tri[2]);
      const Vec3 e1 = b - a, e2 = c - a;
      // fn = e1 x e2: d/de1 = e2 x gfn, d/de2 = gfn x e1.
      const Vec3 g1 = cross(e2, gfn), g2 = cross(gfn, e1);
      const Vec3 g0 = -(g1 + g2);
      const Vec3 gs[3] = {g0, g1, g2};
      for (int k = 0; k < 3; ++k)
        for (int c2 = 0; c2 < 3; ++c2) gp[3 * tri[k] + c2] += gs[k][c2];
    }
  });
}

G3D_NAMESPACE_END
