#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "g3d/math.hpp"

G3D_NAMESPACE_BEGIN

using TriangleList = std::vector<std::array<std::uint32_t, 3>>;

struct TriMesh {
  std::vector<Vec3> positions;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Vec3> normals;

  bool empty() const { return triangles.empty(); }
};

/// Area-weighted vertex normals, unit length. Isolated vertices get +Z.
std::vector<Vec3> compute_vertex_normals(const std::vector<Vec3>& positions,
                                         const std::vector<std::array<std::uint32_t, 3>>& triangles);

inline constexpr Real kDegenerateArea = Real(1e-12);

struct MeshReport {
  bool watertight = true;
  bool consistently_oriented = true;
  std::size_t edge_count = 0;
  std::size_t boundary_edges = 0;
  std::size_t nonmanifold_edges = 0;
  std::size_t degenerate_triangles = 0;
};

MeshReport validate_mesh(const TriMesh& mesh);

Real triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

G3D_NAMESPACE_END
