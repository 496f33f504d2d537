#include "g3d/mesh.hpp"

#include <algorithm>
#include <unordered_map>

G3D_NAMESPACE_BEGIN

Real triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return norm(cross(b - a, c - a)) / 2; }

std::vector<Vec3> compute_vertex_normals(const std::vector<Vec3>& positions,
                                         const std::vector<std::array<std::uint32_t, 3>>& triangles) {
  std::vector<Vec3> acc(positions.size());
  for (const auto& t : triangles) {
    const Vec3 fn = cross(positions[t[1]] - positions[t[0]], positions[t[2]] - positions[t[0]]);
    for (std::uint32_t v : t) acc[v] += fn;
  }
  for (Vec3& n : acc) n = norm(n) > 0 ? normalize(n) : Vec3{0, 0, 1};
  return acc;
}

MeshReport validate_mesh(const TriMesh& mesh) {
  MeshReport report;
  // Directed edge (a -> b) use counts.
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(mesh.triangles.size() * 3);
  auto key = [](std::uint32_t a, std::uint32_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; };
  for (const auto& t : mesh.triangles) {
    if (triangle_area(mesh.positions[t[0]], mesh.positions[t[1]], mesh.positions[t[2]]) <= kDegenerateArea)
      ++report.degenerate_triangles;
    for (int e = 0; e < 3; ++e) ++directed[key(t[e], t[(e + 1) % 3])];
  }
  for (const auto& [k, count] : directed) {
    const auto a = static_cast<std::uint32_t>(k >> 32);
    const auto b = static_cast<std::uint32_t>(k & 0xffffffffu);
    const auto rev = directed.find(key(b, a));
    const int reverse = rev == directed.end() ? 0 : rev->second;
    if (count > 1) report.consistently_oriented = false;
    // Each undirected edge is visited from its smaller endpoint, or from the
    // only direction present.
    if (a < b || reverse == 0) {
      ++report.edge_count;
      const int total = count + reverse;
      if (total == 1) ++report.boundary_edges;
      else if (total > 2) ++report.nonmanifold_edges;
      if (total == 2 && reverse != 1) report.consistently_oriented = false;
    }
  }
  report.watertight = report.boundary_edges == 0 && report.nonmanifold_edges == 0;
  return report;
}

G3D_NAMESPACE_END
