#include "g3d/tet_grid.hpp"

#include <algorithm>
#include <string>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

// Corner c of a unit cube, bit 0 = x, bit 1 = y, bit 2 = z.
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

// Six tetrahedra sharing the 0-6 diagonal.
constexpr std::array<std::array<int, 4>, 6> kCubeTets = {{
    {0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6},
}};

}  // namespace

LatticeCounts lattice_counts(int resolution) {
  const auto r = static_cast<std::uint64_t>(resolution);
  return {(r + 1) * (r + 1) * (r + 1), 6 * r * r * r};
}

std::uint64_t lattice_memory_estimate(int resolution) {
  const LatticeCounts c = lattice_counts(resolution);
  return c.vertices * sizeof(Vec3) + c.tets * sizeof(std::array<std::uint32_t, 4>);
}

Real signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return det3(b - a, c - a, d - a) / Real(6);
}

TetGrid build_lattice(int resolution, std::uint64_t memory_cap) {
  require(resolution >= 1, ErrorCode::kInvalidArgument, "lattice resolution must be >= 1");
  require(resolution <= 1500, ErrorCode::kResourceLimit,
          "lattice resolution " + std::to_string(resolution) + " exceeds index range");
  const std::uint64_t estimate = lattice_memory_estimate(resolution);
  require(estimate <= memory_cap, ErrorCode::kResourceLimit,
          "lattice resolution " + std::to_string(resolution) + " needs " + std::to_string(estimate) +
              " bytes, cap is " + std::to_string(memory_cap));

  TetGrid grid;
  grid.resolution = resolution;
  const int n = resolution + 1;
  const LatticeCounts counts = lattice_counts(resolution);
  grid.vertices.resize(counts.vertices);
  const Real h = grid.cell_edge();
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        // Endpoints are pinned so the cube boundary is exact.
        auto coord = [&](int t) { return t == resolution ? Real(1) : Real(-1) + h * Real(t); };
        grid.vertices[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k)] = {
            coord(i), coord(j), coord(k)};
      }

  grid.tets.reserve(counts.tets);
  auto index = [n](int i, int j, int k) {
    return static_cast<std::uint32_t>(i + n * (j + n * k));
  };
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) {
        std::array<std::uint32_t, 8> corner{};
        for (int c = 0; c < 8; ++c)
          corner[c] = index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
        for (const auto& t : kCubeTets) {
          std::array<std::uint32_t, 4> tet{corner[t[0]], corner[t[1]], corner[t[2]], corner[t[3]]};
          const auto& v = grid.vertices;
          if (signed_tet_volume(v[tet[0]], v[tet[1]], v[tet[2]], v[tet[3]]) < 0) std::swap(tet[2], tet[3]);
          grid.tets.push_back(tet);
        }
      }
  return grid;
}

GridState clamp_offsets(const GridState& state, const TetGrid& grid) {
  require(state.offset.size() == grid.vertex_count(), ErrorCode::kShapeMismatch,
          "grid state offsets do not match lattice vertex count");
  const Real bound = grid.cell_edge() / 2;
  GridState out = state;
  for (Vec3& o : out.offset)
    for (int d = 0; d < 3; ++d) o[d] = clamp(o[d], -bound, bound);
  return out;
}

G3D_NAMESPACE_END
