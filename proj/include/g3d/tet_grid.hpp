#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "g3d/math.hpp"

G3D_NAMESPACE_BEGIN

/// Uniform tetrahedral lattice over the cube [-1,1]^3. Every cube cell is
/// split into six tetrahedra around its (0,0,0)-(1,1,1) diagonal, which gives
/// matching face triangulations between neighbouring cells.
struct TetGrid {
  int resolution = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 4>> tets;

  Real cell_edge() const { return Real(2) / Real(resolution); }
  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t tet_count() const { return tets.size(); }
};

struct LatticeCounts {
  std::uint64_t vertices;
  std::uint64_t tets;
};

/// Closed-form sizes of a lattice: (R+1)^3 vertices and 6 R^3 tetrahedra.
LatticeCounts lattice_counts(int resolution);

/// Bytes a lattice of this resolution would occupy in memory.
std::uint64_t lattice_memory_estimate(int resolution);

inline constexpr std::uint64_t kDefaultLatticeMemoryCap = 3ull << 30;

TetGrid build_lattice(int resolution, std::uint64_t memory_cap = kDefaultLatticeMemoryCap);

Real signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

enum class GridOrigin { kLow, kHigh };

/// Per-vertex signed distance and deformation offset of one grid.
struct GridState {
  std::vector<Real> sdf;
  std::vector<Vec3> offset;
  GridOrigin origin = GridOrigin::kHigh;
};

/// Clamps every offset component to [-h/2, h/2] with h the lattice cell edge.
GridState clamp_offsets(const GridState& state, const TetGrid& grid);

G3D_NAMESPACE_END
