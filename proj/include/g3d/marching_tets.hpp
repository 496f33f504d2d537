#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "g3d/mesh.hpp"
#include "g3d/tape.hpp"
#include "g3d/tet_grid.hpp"

G3D_NAMESPACE_BEGIN

/// Crossing parameters are kept this far from the edge endpoints so that
/// corners sitting exactly on the surface never collapse a triangle.
inline constexpr Real kCrossingMargin = Real(1e-3);

/// Connectivity of an extracted surface. Surface vertex i lies on the lattice
/// edge edges[i] = (a, b) with a < b.
struct MtTopology {
  std::vector<std::array<std::uint32_t, 2>> edges;
  TriangleList triangles;

  std::size_t vertex_count() const { return edges.size(); }
};

/// Corners with s <= 0 are inside. Triangles are wound so that normals point
/// from inside to outside. Rejects non-finite values.
MtTopology extract_topology(const TetGrid& grid, std::span<const Real> sdf);

/// Zero crossing t = s_a / (s_a - s_b), clamped to [margin, 1 - margin].
Real crossing_parameter(Real sa, Real sb);

/// Surface vertex positions for a topology; offsets may be empty.
std::vector<Vec3> surface_positions(const TetGrid& grid, const MtTopology& topo, std::span<const Real> sdf,
                                    std::span<const Vec3> offsets);

/// Full extraction with vertex normals.
TriMesh marching_tetrahedra(const TetGrid& grid, const GridState& state);

/// Tape op: surface positions (V x 3) from sdf (N) and offsets (N x 3). The
/// offsets Var may be invalid (no deformation). The grid must outlive the tape.
Var surface_positions(Tape& tape, const TetGrid& grid, std::shared_ptr<const MtTopology> topo, Var sdf, Var offsets);

/// Tape op: area-weighted unit vertex normals (V x 3).
Var vertex_normals(Tape& tape, Var positions, std::shared_ptr<const TriangleList> triangles);

G3D_NAMESPACE_END
