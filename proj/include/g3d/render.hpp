#pragma once

#include <functional>
#include <memory>
#include <span>

#include "g3d/camera.hpp"
#include "g3d/env_light.hpp"
#include "g3d/mesh.hpp"
#include "g3d/raster.hpp"
#include "g3d/shading.hpp"
#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

struct RenderSettings {
  Vec3 background{1, 1, 1};
  Vec3 normal_background{0, 0, 0};
  bool antialias = true;
  ShadingOptions shading;
};

/// Differentiable mesh: vertex positions and unit normals (V x 3 each).
struct SceneGeometry {
  Var positions;
  Var normals;
  std::shared_ptr<const TriangleList> triangles;
};

/// Maps world points (n x 3) to activated material buffers (n x 9).
using MaterialFn = std::function<Var(Tape&, Var points)>;

struct RenderOutput {
  int width = 0;
  int height = 0;
  Var rgb;       // H x W x 3, tonemapped and sRGB encoded
  Var normal;    // H x W x 3, (n + 1) / 2
  Var mask;      // H x W
  Var radiance;  // covered pixels x 3, before tonemapping
  std::shared_ptr<const GBuffer> gbuf;
};

/// x / (1 + x) followed by the sRGB transfer curve.
Real tonemap_value(Real x);
Var tonemap(Tape& tape, Var radiance);

/// Scatters per covered pixel values (n x C) into an H x W x C image over a
/// constant background.
Var composite(Tape& tape, Var values, std::shared_ptr<const GBuffer> gbuf, std::span<const Real> background);

/// Blends colours across foreground/background pixel pairs by where the
/// silhouette edge crosses the segment between their centres. Gradients reach
/// the edge's vertex positions through the projection.
Var antialias(Tape& tape, Var image, int channels, std::shared_ptr<const GBuffer> gbuf, const CameraView& cam,
              Var positions, std::shared_ptr<const TriangleList> triangles);

RenderOutput render_view(Tape& tape, const SceneGeometry& scene, const MaterialFn& material, Var env_texels,
                         const EnvLayout& layout, const CameraView& cam, const RenderSettings& settings = {});

G3D_NAMESPACE_END
