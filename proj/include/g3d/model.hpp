#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "g3d/camera.hpp"
#include "g3d/env_light.hpp"
#include "g3d/feature_map.hpp"
#include "g3d/fusion.hpp"
#include "g3d/hash_encoder.hpp"
#include "g3d/mlp.hpp"
#include "g3d/run_config.hpp"
#include "g3d/tet_grid.hpp"

G3D_NAMESPACE_BEGIN

inline constexpr int kFeatureChannels = 256;

/// Learnable state of one reconstruction: both lattices, the hash-encoded SDF
/// network of the high grid, the feature-driven residual network and base
/// values of the low grid, the shared texture network and the environment map.
///
/// Parameter groups: high.hash, high.mlp.*, low.mlp.*, low.sdf, tex.hash,
/// tex.mlp.*, env.
class Model {
 public:
  explicit Model(const RunConfig& config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const RunConfig& config() const { return config_; }
  const TetGrid& low_grid() const { return low_grid_; }
  const TetGrid& high_grid() const { return high_grid_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const HashEncoder& geometry_encoder() const { return geometry_encoder_; }
  const HashEncoder& texture_encoder() const { return texture_encoder_; }
  const Mlp& high_mlp() const { return high_mlp_; }
  const Mlp& low_mlp() const { return low_mlp_; }
  const Mlp& texture_mlp() const { return texture_mlp_; }
  ParamGroup& base_sdf() const { return *base_sdf_; }
  ParamGroup& env_raw() const { return *env_raw_; }
  ParamGroup& geometry_table() const { return *geometry_table_; }
  ParamGroup& texture_table() const { return *texture_table_; }
  const EnvLayout& env_layout() const { return env_layout_; }

  /// Raw high-network outputs (n x 4) at arbitrary points, no gradients.
  std::vector<Real> high_raw(std::span<const Real> points) const;
  /// High-grid state at every lattice vertex.
  GridState predict_high() const;
  /// Low-grid state at every lattice vertex from fused features (N x C).
  GridState predict_low(std::span<const Real> fused) const;

  /// Tape: SDF (m) and offsets (m x 3) of the high grid at the listed vertices
  /// (all vertices when `rows` is null).
  std::pair<Var, Var> high_outputs(Tape& tape, const std::shared_ptr<const std::vector<std::uint32_t>>& rows) const;
  /// Tape: low-grid SDF and offsets at the listed vertices given their fused
  /// features (m x C, constants).
  std::pair<Var, Var> low_outputs(Tape& tape, const std::shared_ptr<const std::vector<std::uint32_t>>& rows,
                                  std::vector<Real> fused) const;
  /// Tape: gradient-carrying forward-mode SDF derivatives at points (4 blocks
  /// of n x 4 raw outputs; column 0 is the SDF).
  Var high_jvp(Tape& tape, std::vector<Real> points) const;
  /// Tape: activated material (n x 9) at surface points (n x 3).
  Var material(Tape& tape, Var points) const;
  Var env_texels(Tape& tape) const;

  /// Fresh Adam moments and step counters for every group.
  void reset_optimizer() { params_.reset_optimizer(); }

 private:
  RunConfig config_;
  TetGrid low_grid_, high_grid_;
  ParamStore params_;
  HashEncoder geometry_encoder_, texture_encoder_;
  Mlp high_mlp_, low_mlp_, texture_mlp_;
  ParamGroup* base_sdf_ = nullptr;
  ParamGroup* env_raw_ = nullptr;
  ParamGroup* geometry_table_ = nullptr;
  ParamGroup* texture_table_ = nullptr;
  EnvLayout env_layout_;
};

/// Pixel-aligned feature maps of the known views with their cameras.
class FeatureBank {
 public:
  FeatureBank() = default;
  FeatureBank(std::vector<FeatureMap> maps, std::vector<CameraView> cams);

  int views() const { return static_cast<int>(maps_.size()); }
  int channels() const { return maps_.empty() ? 0 : maps_[0].channels; }
  const std::vector<FeatureMap>& maps() const { return maps_; }
  const std::vector<CameraView>& cameras() const { return cams_; }

  /// Fused features (n x C) of arbitrary points for reference view r.
  std::vector<Real> fuse(std::span<const Vec3> points, int r, FusionStats* stats = nullptr) const;

  /// Replaces the tracked point set; fused features per reference are then
  /// computed on first request and memoised until the next call.
  void track(std::vector<Vec3> points);
  const std::vector<Real>& tracked(int r);
  const FusionStats& stats() const { return stats_; }

 private:
  std::vector<FeatureMap> maps_;
  std::vector<CameraView> cams_;
  std::vector<Vec3> tracked_points_;
  std::vector<std::vector<Real>> tracked_fused_;
  std::vector<bool> tracked_ready_;
  FusionStats stats_;
};

/// Vertex subset that is re-evaluated every step: vertices with |s| below
/// `band` and both ends of every sign-changing edge. Everything else keeps
/// the values of the last full evaluation.
struct BandCache {
  std::vector<Real> sdf;
  std::vector<Real> offset;  // N x 3
  std::shared_ptr<const std::vector<std::uint32_t>> active;  // null: every vertex

  bool empty() const { return sdf.empty(); }
};

BandCache make_band(const TetGrid& grid, const GridState& full, Real band);

/// Deformed lattice positions v + delta.
std::vector<Vec3> deformed_vertices(const TetGrid& grid, std::span<const Real> offset);

G3D_NAMESPACE_END
