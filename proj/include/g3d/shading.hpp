#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "g3d/bsdf.hpp"
#include "g3d/camera.hpp"
#include "g3d/env_light.hpp"
#include "g3d/mesh.hpp"
#include "g3d/raster.hpp"
#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

/// Channel layout of activated material buffers (n x 9).
namespace material {
inline constexpr int kKd = 0;  // 3 channels, [0,1]
inline constexpr int kOcclusion = 3;
inline constexpr int kRoughness = 4;
inline constexpr int kMetalness = 5;
inline constexpr int kKn = 6;  // 3 channels, [-1,1]
inline constexpr int kChannels = 9;
}  // namespace material

inline constexpr Real kMinRoughness = Real(0.08);

/// Network outputs to material terms: sigmoid for k_d, o and m,
/// 0.08 + 0.92 sigmoid for r, tanh for k_n.
Var activate_material(Tape& tape, Var raw);

/// Constant material for n pixels.
std::vector<Real> constant_material(const MaterialSample& m, std::size_t n);

/// Per covered pixel: world position, unit interpolated normal and unit
/// tangent (n x 9). Barycentrics come from the intersection of the pixel ray
/// with the triangle, so they are perspective correct and differentiable in
/// the vertex positions.
Var pixel_geometry(Tape& tape, const CameraView& cam, std::shared_ptr<const GBuffer> gbuf, Var positions,
                   Var normals, std::shared_ptr<const TriangleList> triangles);

/// Shading normal normalize(n + 0.5 (kn.x t + kn.y (n x t) + kn.z n)) (n x 3).
Var shading_normals(Tape& tape, Var geometry, Var material);

struct ShadingOptions {
  bool diffuse = true;
  bool specular = true;
  int diffuse_samples = 64;
  int specular_samples = 32;
};

/// Fixed sample sets: cosine-weighted Fibonacci directions for the diffuse
/// integral and (u1, phi) pairs for GGX half-vector sampling.
const std::vector<Vec3>& diffuse_directions(int count);
const std::vector<std::array<Real, 2>>& specular_pairs(int count);

/// Orthonormal basis (b1, b2) completing a unit normal.
void orthonormal_basis(const Vec3& n, Vec3& b1, Vec3& b2);

/// Outgoing radiance per pixel (n x 3):
/// o ((1 - m) k_d E_d + specular), with E_d the mean radiance over cosine
/// samples and the specular lobe estimated by GGX importance sampling.
Var shade(Tape& tape, const CameraView& cam, Var geometry, Var normals, Var material, Var env_texels,
          const EnvLayout& layout, const ShadingOptions& options = {});

G3D_NAMESPACE_END
