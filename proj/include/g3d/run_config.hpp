#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "g3d/hash_encoder.hpp"
#include "g3d/losses.hpp"

G3D_NAMESPACE_BEGIN

/// Everything one optimization run needs. Text form: one `key = value` per
/// line, `#` starts a comment, unknown or repeated keys are errors. Relative
/// paths are resolved against the directory of the config file.
struct RunConfig {
  // Inputs and outputs.
  std::string bundle;          // supervision bundle directory
  std::string cameras;         // camera JSON; empty means a turntable of K views
  std::string output = "out";  // run directory
  std::string shape = "mannequin";  // key "template"

  // Schedule.
  std::uint64_t seed = 0;
  int init_iterations = 10000;
  int init_points = 10000;
  int iterations = 5000;
  int render_resolution = 256;
  int export_resolution = 512;
  int checkpoint_every = 500;  // 0 disables periodic checkpoints
  int log_every = 1;

  // Grids and networks.
  int low_resolution = 64;
  int high_resolution = 256;
  HashEncoderConfig geometry_encoder;
  HashEncoderConfig texture_encoder;
  int env_width = 32;
  int env_height = 16;
  double mlp_lr = 1e-3;
  double grid_lr = 1e-2;  // per-vertex base SDF and environment texels

  // Objectives.
  LossWeights weights;
  int eikonal_points = 5000;
  bool symmetric_masks = false;
  bool specular = true;

  // Viewpoints.
  double camera_radius = 3;
  double camera_fov_deg = 40;
  double novel_elevation_min = -20;
  double novel_elevation_max = 40;

  // Fused pixel-aligned features are re-sampled at deformed positions and
  // the full grids re-evaluated every feature_refresh steps. In between only
  // vertices within band_cells cell edges of the surface are re-evaluated
  // (0: every vertex, every step).
  int feature_refresh = 10;
  double band_cells = 3;

  // Providers.
  std::string denoiser = "identity";
  std::string features = "builtin";
  std::string boundary = "auto";  // bundle maps when present, else proxy
  std::string prompt;
  double omega = 7.5;
  double t_min = 0.02;
  double t_max_start = 0.6;
  double t_max_end = 0.1;
  double provider_timeout = 60;
  int provider_retries = 2;
};

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical text with every key; parse(format(c)) == c.
std::string format_run_config(const RunConfig& config);

G3D_NAMESPACE_END
