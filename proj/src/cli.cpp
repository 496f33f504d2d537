#include "g3d/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "g3d/camera_file.hpp"
#include "g3d/error.hpp"
#include "g3d/obj_io.hpp"
#include "g3d/pipeline.hpp"

G3D_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

RunConfig config_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
  RunConfig c = load_run_config(path);
  if (seed) c.seed = *seed;
  return c;
}

Vec3 parse_point(const std::string& text) {
  Vec3 p;
  std::istringstream in(text);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    require(i < 3, ErrorCode::kConfig, "--point expects x,y,z");
    try {
      std::size_t used = 0;
      p[i] = static_cast<Real>(std::stod(part, &used));
      require(used == part.size(), ErrorCode::kConfig, "--point expects x,y,z");
    } catch (const std::logic_error&) {
      fail(ErrorCode::kConfig, "--point expects x,y,z, got '" + text + "'");
    }
    ++i;
  }
  require(i == 3, ErrorCode::kConfig, "--point expects x,y,z, got '" + text + "'");
  return p;
}

struct LoadedCheckpoint {
  RunConfig config;
  Checkpoint ckpt;
  std::unique_ptr<Model> model;
};

LoadedCheckpoint open_checkpoint(const std::string& path) {
  require(fs::exists(path), ErrorCode::kConfig, "checkpoint not found: " + path);
  LoadedCheckpoint l;
  l.ckpt = read_checkpoint(path);
  l.config = checkpoint_config(l.ckpt);
  l.model = std::make_unique<Model>(l.config);
  load_params(l.model->params(), l.ckpt);
  return l;
}

TriMesh extract_grid(LoadedCheckpoint& l, const std::string& grid) {
  if (grid == "high") return grid_mesh(l.model->high_grid(), l.model->predict_high());
  const SupervisionBundle bundle = load_bundle(l.config.bundle);
  Trainer trainer(*l.model, bundle, known_cameras(l.config, bundle.view_count(), bundle.width(), bundle.height()),
                  make_providers(l.config, bundle.has_hed()));
  trainer.load_state(l.ckpt);
  return trainer.extract(0).low;
}

int cmd_init(const std::string& config_path, const std::optional<std::uint64_t>& seed, std::string out_path,
             std::ostream& out) {
  const RunConfig c = config_with_seed(config_path, seed);
  Model model(c);
  const InitReport r = init_grids(model, ShapeTemplate::parse(c.shape), c.init_iterations, c.init_points, c.seed, &out);
  if (out_path.empty()) {
    fs::create_directories(c.output);
    out_path = (fs::path(c.output) / "checkpoint_init.g3dc").string();
  }
  write_run_checkpoint(out_path, model, nullptr, 0);
  out << "init iterations=" << r.iterations << " high_mse=" << r.high_loss << " low_mse=" << r.low_loss
      << " checkpoint=" << out_path << "\n";
  return kExitOk;
}

int cmd_optimize(const std::string& config_path, const std::optional<std::uint64_t>& seed, const std::string& ckpt,
                 std::ostream& out) {
  const RunConfig c = config_with_seed(config_path, seed);
  RunOptions options;
  options.log = &out;
  if (!ckpt.empty()) {
    require(fs::exists(ckpt), ErrorCode::kConfig, "checkpoint not found: " + ckpt);
    options.resume = ckpt;
  }
  const RunReport r = run_optimization(c, options);
  out << "mesh=" << r.high_mesh.string() << " low_mesh=" << r.low_mesh.string()
      << " checkpoint=" << r.checkpoint.string() << "\n";
  return kExitOk;
}

int cmd_extract(const std::string& ckpt, const std::string& grid, const std::string& out_path, std::ostream& out) {
  LoadedCheckpoint l = open_checkpoint(ckpt);
  const TriMesh mesh = extract_grid(l, grid);
  export_obj(mesh, out_path);
  const MeshReport r = validate_mesh(mesh);
  out << "vertices=" << mesh.positions.size() << " triangles=" << mesh.triangles.size()
      << " watertight=" << (r.watertight ? "true" : "false") << "\n";
  return kExitOk;
}

int cmd_render(const std::string& ckpt, const std::string& camera_file, const std::string& out_dir,
               const std::string& grid, std::ostream& out) {
  require(fs::exists(camera_file), ErrorCode::kConfig, "camera file not found: " + camera_file);
  const auto specs = load_camera_file(camera_file);
  LoadedCheckpoint l = open_checkpoint(ckpt);
  const TriMesh mesh = extract_grid(l, grid);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ViewRender r = render_mesh(*l.model, mesh, specs[i].view(), l.config.specular);
    const fs::path base = fs::path(out_dir) / ("view_" + std::to_string(i + 1));
    write_png(base.string() + ".png", r.rgb);
    write_png(base.string() + "_normal.png", r.normal);
    write_png(base.string() + "_mask.png", r.mask);
  }
  out << "rendered " << specs.size() << " views to " << out_dir << "\n";
  return kExitOk;
}

int cmd_fuse_debug(const std::string& bundle_dir, const std::string& point_text, const std::string& config_path,
                   int reference, std::ostream& out) {
  const Vec3 p = parse_point(point_text);
  RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  const SupervisionBundle bundle = load_bundle(bundle_dir);
  const int K = bundle.view_count();
  require(reference >= 1 && reference <= K, ErrorCode::kConfig,
          "--reference must be between 1 and " + std::to_string(K));
  const auto cams = known_cameras(c, K, bundle.width(), bundle.height());
  const Providers providers = make_providers(c, bundle.has_hed());
  const FeatureBank bank = build_feature_bank(bundle, cams, *providers.features);

  const std::vector<Vec3> pts{p};
  std::vector<std::uint8_t> valid;
  const auto coords = project_to_maps(bank.cameras(), bank.maps(), pts, valid);
  const ViewSamples samples = sample_views(bank.maps(), coords, valid, 1);
  int clamped = 0;
  const auto w = similarity_weights(samples.values, K, samples.C, reference - 1, kFusionAlpha, samples.valid, &clamped);
  double wsum = 0;
  for (Real x : w) wsum += x;
  out << "point=" << p.x << "," << p.y << "," << p.z << " reference=" << reference << " views=" << K << "\n";
  for (int k = 0; k < K; ++k)
    out << "view " << k + 1 << " valid=" << int(valid[k]) << " u=" << coords[k][0] << " v=" << coords[k][1]
        << " weight=" << w[k] << " normalized=" << (wsum > 0 ? w[k] / wsum : 0.0) << "\n";
  FusionStats stats;
  const auto fused = fuse_all(samples, reference - 1, kFusionAlpha, &stats);
  double norm2 = 0, mn = fused[0], mx = fused[0], mean = 0;
  for (Real x : fused) {
    norm2 += double(x) * x;
    mean += x;
    mn = std::min<double>(mn, x);
    mx = std::max<double>(mx, x);
  }
  out << "fused channels=" << fused.size() << " norm=" << std::sqrt(norm2) << " mean=" << mean / fused.size()
      << " min=" << mn << " max=" << mx << " clamped=" << clamped
      << " fallback=" << (stats.degenerate_points ? "reference" : "none") << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& mesh_path, std::ostream& out) {
  require(fs::exists(mesh_path), ErrorCode::kConfig, "mesh not found: " + mesh_path);
  const TriMesh mesh = import_obj(mesh_path);
  const MeshReport r = validate_mesh(mesh);
  out << "vertices=" << mesh.positions.size() << "\ntriangles=" << mesh.triangles.size()
      << "\nwatertight=" << (r.watertight ? "true" : "false")
      << "\nconsistently_oriented=" << (r.consistently_oriented ? "true" : "false")
      << "\nboundary_edges=" << r.boundary_edges << "\nnonmanifold_edges=" << r.nonmanifold_edges
      << "\ndegenerate_triangles=" << r.degenerate_triangles << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-resolution tetrahedral-grid reconstruction from multi-view images", "g3d"};
  app.require_subcommand(1, 1);

  std::string config, checkpoint, grid = "high", out_path, camera_file, out_dir, bundle, point;
  std::optional<std::uint64_t> seed;
  int reference = 1;

  auto* init = app.add_subcommand("init", "fit both grids to the template shape and write a checkpoint");
  init->add_option("--config", config, "run configuration file")->required();
  init->add_option("--seed", seed, "override the configured seed");
  init->add_option("--out", out_path, "checkpoint path (default <output>/checkpoint_init.g3dc)");

  auto* optimize = app.add_subcommand("optimize", "run the joint optimization");
  optimize->add_option("--config", config, "run configuration file")->required();
  optimize->add_option("--seed", seed, "override the configured seed");
  optimize->add_option("--checkpoint", checkpoint, "continue from this checkpoint instead of initializing");

  auto* extract = app.add_subcommand("extract", "extract a grid's mesh from a checkpoint");
  extract->add_option("--checkpoint", checkpoint)->required();
  extract->add_option("--grid", grid)->check(CLI::IsMember({"high", "low"}));
  extract->add_option("--out", out_path, "output OBJ")->required();

  auto* render = app.add_subcommand("render", "render RGB, normal and mask images from a checkpoint");
  render->add_option("--checkpoint", checkpoint)->required();
  render->add_option("--camera-file", camera_file)->required();
  render->add_option("--out-dir", out_dir)->required();
  render->add_option("--grid", grid)->check(CLI::IsMember({"high", "low"}));

  auto* fuse = app.add_subcommand("fuse-debug", "print per-view fusion weights at a point");
  fuse->add_option("--bundle", bundle)->required();
  fuse->add_option("--point", point, "x,y,z")->required();
  fuse->add_option("--config", config, "optional run configuration (cameras, feature provider)");
  fuse->add_option("--reference", reference, "1-based reference view");

  auto* validate = app.add_subcommand("validate", "report mesh watertightness");
  validate->add_option("--mesh", out_path, "OBJ file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (init->parsed()) return cmd_init(config, seed, out_path, out);
    if (optimize->parsed()) return cmd_optimize(config, seed, checkpoint, out);
    if (extract->parsed()) return cmd_extract(checkpoint, grid, out_path, out);
    if (render->parsed()) return cmd_render(checkpoint, camera_file, out_dir, grid, out);
    if (fuse->parsed()) return cmd_fuse_debug(bundle, point, config, reference, out);
    if (validate->parsed()) return cmd_validate(out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

G3D_NAMESPACE_END
