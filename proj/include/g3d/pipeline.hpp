#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "g3d/bundle.hpp"
#include "g3d/checkpoint.hpp"
#include "g3d/mesh.hpp"
#include "g3d/model.hpp"
#include "g3d/providers.hpp"
#include "g3d/render.hpp"
#include "g3d/shape_template.hpp"

G3D_NAMESPACE_BEGIN

/// Counter-based generator: every (seed, step, stream) triple gives an
/// independent, reproducible sequence, so no generator state has to be saved.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t step, std::uint64_t stream);
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n);  // uniform in [0, n)

 private:
  std::uint64_t state_;
};

struct Viewpoints {
  int known = 0;  // 0-based; also the fusion reference
  CameraView novel;
  Real novel_azimuth = 0, novel_elevation = 0;
};

/// Known view uniform over K, novel view with azimuth in [0, 360) and
/// elevation in [el_min, el_max] at the given radius and field of view.
Viewpoints sample_viewpoints(Rng& rng, int K, const RunConfig& config, int width, int height);

struct InitReport {
  int iterations = 0;
  double high_loss = 0;  // last mean squared error of the network fit
  double low_loss = 0;   // last mean squared error of the per-vertex fit
};

/// Fits the high-grid network to the template SDF on random batches of
/// high-grid vertices and the low-grid base values on every low-grid vertex,
/// then clears the optimizer state. Throws kDivergence when a loss grows
/// tenfold within 100 iterations.
InitReport init_grids(Model& model, const ShapeTemplate& shape, int iterations, int points, std::uint64_t seed,
                      std::ostream* log = nullptr);

struct Providers {
  std::unique_ptr<Denoiser> denoiser;
  std::unique_ptr<FeatureProvider> features;
  std::unique_ptr<BoundaryProvider> boundary;  // null: boundary maps come from the bundle
};

Providers make_providers(const RunConfig& config, bool bundle_has_hed);

/// Known cameras at bundle resolution: from the camera file when configured
/// (entries tagged 1..K), otherwise a turntable at elevation 0.
std::vector<CameraView> known_cameras(const RunConfig& config, int K, int width, int height);

/// Feature maps of every known view through the configured provider.
FeatureBank build_feature_bank(const SupervisionBundle& bundle, const std::vector<CameraView>& cams,
                               FeatureProvider& provider);

struct StepMetrics {
  int step = 0;
  int view = 0;  // 0-based known view
  double known = 0, novel = 0, hed = 0, eikonal = 0, total = 0;
  std::size_t high_vertices = 0, low_vertices = 0;
  std::size_t high_active = 0, low_active = 0;
};

std::string format_metrics(const StepMetrics& m);

/// Meshes of both grids extracted from the current parameters.
struct GridMeshes {
  TriMesh high, low;
};

class Trainer {
 public:
  Trainer(Model& model, const SupervisionBundle& bundle, std::vector<CameraView> cams, Providers providers);

  /// One joint optimization step; `step` selects the random draws and the
  /// noise-level schedule (total steps from the config).
  StepMetrics step(int step);
  /// Builds the loss of `step` on `tape` without touching the parameters.
  /// Band caches refresh here on schedule, as in step().
  StepMetrics evaluate(Tape& tape, int step, Var& total);

  /// Cached full-grid evaluations carried between band refreshes.
  void save_state(Checkpoint& ckpt) const;
  void load_state(const Checkpoint& ckpt);

  /// Full-grid meshes; the low grid uses fusion reference `reference`.
  GridMeshes extract(int reference = 0);
  FeatureBank& features() { return bank_; }
  const std::vector<CameraView>& cameras() const { return cams_; }
  /// Directory for buffers dumped when a loss turns non-finite (empty: none).
  void set_dump_dir(std::filesystem::path dir) { dump_dir_ = std::move(dir); }

 private:
  void refresh(int reference);

  Model& model_;
  RunConfig config_;
  std::vector<CameraView> cams_;        // bundle resolution
  std::vector<CameraView> train_cams_;  // render resolution
  std::vector<std::vector<Real>> target_rgb_, target_alpha_, target_hed_;
  Providers providers_;
  FeatureBank bank_;
  BandCache high_band_, low_band_;
  std::filesystem::path dump_dir_;
};

/// Triangle mesh of a grid state (marching tetrahedra plus vertex normals).
TriMesh grid_mesh(const TetGrid& grid, const GridState& state);

struct ViewRender {
  Image rgb, normal, mask;
};

/// Renders a mesh with the model's texture network and environment light.
ViewRender render_mesh(const Model& model, const TriMesh& mesh, const CameraView& cam, bool specular = true);

/// Checkpoint of the model parameters, optimizer state, run config, step
/// counter and trainer caches.
Checkpoint make_checkpoint(const Model& model, const Trainer* trainer, int step);
void write_run_checkpoint(const std::filesystem::path& path, const Model& model, const Trainer* trainer, int step);
/// Config, parameters and step counter stored in a checkpoint.
RunConfig checkpoint_config(const Checkpoint& ckpt);
int checkpoint_step(const Checkpoint& ckpt);

struct RunOptions {
  std::filesystem::path resume;  // checkpoint to continue from; skips init
  bool skip_init = false;
  std::ostream* log = nullptr;   // progress lines
};

struct RunReport {
  InitReport init;
  std::vector<StepMetrics> steps;
  std::filesystem::path high_mesh, low_mesh, loss_log, checkpoint;
  std::vector<std::filesystem::path> renders;
};

/// Init (unless resuming) then the main loop, writing into config.output:
/// losses.log, checkpoints, mesh_high.obj, mesh_low.obj and renders of the
/// known views at the export resolution.
RunReport run_optimization(const RunConfig& config, const RunOptions& options = {});

/// Synthetic supervision: a shape rendered with the engine's own shading
/// under a uniform white environment from a turntable of cameras.
struct FixtureOptions {
  int views = 6;
  int resolution = 512;
  int mesh_resolution = 128;
  Real radius = 3;
  Real fov_deg = 40;
  bool specular = true;
};

/// Three-colour albedo of the mannequin: skin on head and arms, shirt on the
/// torso, trousers on the legs (by nearest primitive).
Vec3 fixture_albedo(const ShapeTemplate& shape, const Vec3& p);

SupervisionBundle render_fixture(const ShapeTemplate& shape, const FixtureOptions& options = {});

G3D_NAMESPACE_END
