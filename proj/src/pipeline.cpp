#include "g3d/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "g3d/camera_file.hpp"
#include "g3d/edge_proxy.hpp"
#include "g3d/error.hpp"
#include "g3d/losses.hpp"
#include "g3d/marching_tets.hpp"
#include "g3d/obj_io.hpp"
#include "g3d/ops.hpp"
#include "g3d/shading.hpp"

G3D_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string shortest(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<Real> copy_values(const Tape& tape, Var v) {
  auto s = tape.value(v);
  return {s.begin(), s.end()};
}

Image to_image(const Tape& tape, Var v, int w, int h, int c) {
  Image img(w, h, c);
  img.data = copy_values(tape, v);
  return img;
}

GridState state_from(const std::vector<Real>& sdf, const std::vector<Real>& offset, GridOrigin origin) {
  GridState s;
  s.origin = origin;
  s.sdf = sdf;
  s.offset.resize(sdf.size());
  for (std::size_t i = 0; i < sdf.size(); ++i) s.offset[i] = {offset[3 * i], offset[3 * i + 1], offset[3 * i + 2]};
  return s;
}

std::vector<float> to_float(const std::vector<Real>& v) { return {v.begin(), v.end()}; }

std::vector<Real> from_section(const Checkpoint& ckpt, const std::string& name, std::size_t expected) {
  const CheckpointSection* s = ckpt.find(name);
  require(s != nullptr, ErrorCode::kMissingFile, "checkpoint lacks section " + name);
  require(s->data.size() == expected, ErrorCode::kSizeMismatch, "checkpoint section " + name + " has the wrong size");
  return {s->data.begin(), s->data.end()};
}

// Absolute paths keep a stored config meaningful from any working directory.
RunConfig absolutized(RunConfig c) {
  const auto abs = [](std::string& p) {
    if (!p.empty()) p = fs::absolute(p).lexically_normal().string();
  };
  const auto abs_prefixed = [&](std::string& v) {
    for (const std::string pre : {"mesh:", "file:"})
      if (v.rfind(pre, 0) == 0) {
        std::string rest = v.substr(pre.size());
        abs(rest);
        v = pre + rest;
      }
  };
  abs(c.bundle);
  abs(c.cameras);
  abs(c.output);
  abs_prefixed(c.shape);
  abs_prefixed(c.features);
  abs_prefixed(c.boundary);
  return c;
}

std::vector<Vec3> rows_of(const std::vector<Vec3>& all, const std::shared_ptr<const std::vector<std::uint32_t>>& rows) {
  if (!rows) return all;
  std::vector<Vec3> out;
  out.reserve(rows->size());
  for (std::uint32_t r : *rows) out.push_back(all[r]);
  return out;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) {
  std::uint64_t x = seed;
  state_ = splitmix(x);
  x = state_ ^ step;
  state_ = splitmix(x);
  x = state_ ^ stream;
  state_ = splitmix(x);
}

std::uint64_t Rng::next() { return splitmix(state_); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

Viewpoints sample_viewpoints(Rng& rng, int K, const RunConfig& config, int width, int height) {
  require(K >= 1, ErrorCode::kInvalidArgument, "sample_viewpoints: no known views");
  Viewpoints vp;
  vp.known = static_cast<int>(rng.index(static_cast<std::size_t>(K)));
  vp.novel_azimuth = static_cast<Real>(rng.uniform(0, 360));
  vp.novel_elevation = static_cast<Real>(rng.uniform(config.novel_elevation_min, config.novel_elevation_max));
  vp.novel = make_orbit_camera(vp.novel_azimuth, vp.novel_elevation, static_cast<Real>(config.camera_radius),
                               static_cast<Real>(config.camera_fov_deg), width, height, 0);
  return vp;
}

InitReport init_grids(Model& model, const ShapeTemplate& shape, int iterations, int points, std::uint64_t seed,
                      std::ostream* log) {
  require(iterations >= 0 && points > 0, ErrorCode::kInvalidArgument, "init_grids: bad schedule");
  InitReport report;
  report.iterations = iterations;
  const TetGrid& high = model.high_grid();
  const TetGrid& low = model.low_grid();
  std::vector<Real> low_target(low.vertex_count());
  for (std::size_t i = 0; i < low_target.size(); ++i) low_target[i] = shape.sdf(low.vertices[i]);

  std::vector<ParamGroup*> groups;
  for (const auto& g : model.params().groups())
    if (g->name.rfind("high.", 0) == 0 || g->name == "low.sdf") groups.push_back(g.get());

  std::vector<double> high_hist, low_hist;
  const auto diverged = [](const std::vector<double>& h) {
    return h.size() > 100 && h.back() > 10 * h[h.size() - 101] && std::isfinite(h[h.size() - 101]);
  };
  for (int it = 0; it < iterations; ++it) {
    Rng rng(seed, static_cast<std::uint64_t>(it), 0x1417);
    auto rows = std::make_shared<std::vector<std::uint32_t>>(points);
    std::vector<Real> target(points);
    for (int i = 0; i < points; ++i) {
      (*rows)[i] = static_cast<std::uint32_t>(rng.index(high.vertex_count()));
      target[i] = shape.sdf(high.vertices[(*rows)[i]]);
    }
    for (ParamGroup* g : groups) std::fill(g->grad.begin(), g->grad.end(), Real(0));
    Tape tape;
    const Var s = model.high_outputs(tape, rows).first;
    const Var lh = mse(tape, s, tape.constant(std::move(target)));
    const Var ll = mse(tape, tape.parameter(model.base_sdf()), tape.constant(low_target));
    tape.backward(add(tape, lh, ll));
    for (ParamGroup* g : groups) adam_step(*g);
    report.high_loss = tape.value(lh)[0];
    report.low_loss = tape.value(ll)[0];
    high_hist.push_back(report.high_loss);
    low_hist.push_back(report.low_loss);
    if (!std::isfinite(report.high_loss) || !std::isfinite(report.low_loss) || diverged(high_hist) ||
        diverged(low_hist))
      fail(ErrorCode::kDivergence, "init diverged at iteration " + std::to_string(it) +
                                       ": high-grid loss " + shortest(report.high_loss) + " (100 iterations earlier " +
                                       shortest(high_hist.size() > 100 ? high_hist[high_hist.size() - 101] : 0) +
                                       "), low-grid loss " + shortest(report.low_loss) + " (100 iterations earlier " +
                                       shortest(low_hist.size() > 100 ? low_hist[low_hist.size() - 101] : 0) + ")");
    if (log && (it % 100 == 0 || it + 1 == iterations))
      *log << "init " << it << " high_mse=" << shortest(report.high_loss) << " low_mse=" << shortest(report.low_loss)
           << "\n";
  }
  model.reset_optimizer();
  return report;
}

Providers make_providers(const RunConfig& config, bool bundle_has_hed) {
  HttpOptions http{config.provider_timeout, config.provider_retries};
  Providers p;
  p.denoiser = make_denoiser(config.denoiser, http);
  p.features = make_feature_provider(config.features, http);
  if (config.boundary == "auto") {
    if (!bundle_has_hed) p.boundary = std::make_unique<EdgeProxyBoundary>();
  } else {
    p.boundary = make_boundary_provider(config.boundary, http);
  }
  return p;
}

std::vector<CameraView> known_cameras(const RunConfig& config, int K, int width, int height) {
  if (config.cameras.empty()) {
    auto cams = make_turntable_cameras(K, static_cast<Real>(config.camera_radius),
                                       static_cast<Real>(config.camera_fov_deg * kPi / 180), width, height);
    return cams;
  }
  const auto specs = load_camera_file(config.cameras);
  std::vector<CameraView> cams(K);
  std::vector<bool> seen(K, false);
  for (const auto& s : specs) {
    if (s.tag < 1 || s.tag > K) continue;
    require(!seen[s.tag - 1], ErrorCode::kConfig, "camera file lists view " + std::to_string(s.tag) + " twice");
    seen[s.tag - 1] = true;
    cams[s.tag - 1] = resized(s.view(), width, height);
  }
  for (int k = 0; k < K; ++k)
    require(seen[k], ErrorCode::kConfig, "camera file has no entry for known view " + std::to_string(k + 1));
  return cams;
}

FeatureBank build_feature_bank(const SupervisionBundle& bundle, const std::vector<CameraView>& cams,
                               FeatureProvider& provider) {
  std::vector<FeatureMap> maps;
  for (int k = 0; k < bundle.view_count(); ++k) {
    try {
      maps.push_back(provider.features(bundle.images[k], k));
    } catch (const Error& e) {
      fail(ErrorCode::kProvider, "feature provider failed for view " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return FeatureBank(std::move(maps), cams);
}

std::string format_metrics(const StepMetrics& m) {
  return "step=" + std::to_string(m.step) + " view=" + std::to_string(m.view + 1) + " known=" + shortest(m.known) +
         " novel=" + shortest(m.novel) + " hed=" + shortest(m.hed) + " eikonal=" + shortest(m.eikonal) +
         " total=" + shortest(m.total) + " high_vertices=" + std::to_string(m.high_vertices) +
         " low_vertices=" + std::to_string(m.low_vertices);
}

Trainer::Trainer(Model& model, const SupervisionBundle& bundle, std::vector<CameraView> cams, Providers providers)
    : model_(model), config_(model.config()), cams_(std::move(cams)), providers_(std::move(providers)) {
  const int K = bundle.view_count();
  require(K >= 1 && static_cast<int>(cams_.size()) == K, ErrorCode::kInvalidArgument,
          "trainer: one camera per known view required");
  require(providers_.denoiser && providers_.features, ErrorCode::kInvalidArgument, "trainer: providers missing");
  require(providers_.boundary || bundle.has_hed(), ErrorCode::kInvalidArgument,
          "trainer: no boundary maps in the bundle and no boundary provider");
  const int R = config_.render_resolution;
  const int W = bundle.width(), H = bundle.height();
  require(W % R == 0 && H % (W / R) == 0, ErrorCode::kConfig,
          "render_resolution " + std::to_string(R) + " must divide the bundle width " + std::to_string(W));
  const int f = W / R;
  const bool proxy = dynamic_cast<EdgeProxyBoundary*>(providers_.boundary.get()) != nullptr;
  for (int k = 0; k < K; ++k) {
    const Image rgb = downsample(bundle.images[k], f);
    target_rgb_.push_back(rgb.data);
    target_alpha_.push_back(downsample(bundle.alphas[k], f).data);
    if (proxy)
      target_hed_.push_back(edge_proxy(rgb.data, rgb.width, rgb.height, 3));
    else if (providers_.boundary)
      target_hed_.push_back(downsample(providers_.boundary->boundary(bundle.images[k], k), f).data);
    else
      target_hed_.push_back(downsample(bundle.hed[k], f).data);
    train_cams_.push_back(resized(cams_[k], W / f, H / f));
  }
  bank_ = build_feature_bank(bundle, cams_, *providers_.features);
}

void Trainer::refresh(int reference) {
  const Real band = static_cast<Real>(config_.band_cells);
  const TetGrid& high = model_.high_grid();
  const TetGrid& low = model_.low_grid();
  high_band_ = make_band(high, model_.predict_high(), band * high.cell_edge());
  const std::vector<Real> prior = low_band_.empty() ? std::vector<Real>(3 * low.vertex_count(), 0) : low_band_.offset;
  const auto fused = bank_.fuse(deformed_vertices(low, prior), reference);
  low_band_ = make_band(low, model_.predict_low(fused), band * low.cell_edge());
  bank_.track(rows_of(deformed_vertices(low, low_band_.offset), low_band_.active));
}

StepMetrics Trainer::step(int step) {
  Tape tape;
  Var total;
  const StepMetrics m = evaluate(tape, step, total);
  tape.backward(total);
  adam_step(model_.params());
  return m;
}

StepMetrics Trainer::evaluate(Tape& tape, int step, Var& total) {
  const int K = bank_.views();
  const int Wt = train_cams_[0].width, Ht = train_cams_[0].height;
  Rng rng(config_.seed, static_cast<std::uint64_t>(step), 0x57e9);
  const Viewpoints vp = sample_viewpoints(rng, K, config_, Wt, Ht);
  const int k = vp.known;
  const double progress = config_.iterations > 1 ? static_cast<double>(step) / (config_.iterations - 1) : 0.0;
  const double t_max = config_.t_max_start + (config_.t_max_end - config_.t_max_start) * std::min(1.0, progress);
  DenoiseRequest request{config_.prompt, static_cast<Real>(rng.uniform(config_.t_min, t_max)),
                         static_cast<Real>(config_.omega), rng.next()};
  Rng eik_rng(config_.seed, static_cast<std::uint64_t>(step), 0xe1c0);
  std::vector<Real> eik_points(3 * static_cast<std::size_t>(config_.eikonal_points));
  for (Real& x : eik_points) x = static_cast<Real>(eik_rng.uniform(-1, 1));

  if (high_band_.empty() || step % config_.feature_refresh == 0) refresh(k);

  const auto assemble = [&](const BandCache& band, Var sdf, Var off) -> std::pair<Var, Var> {
    if (!band.active) return {sdf, off};
    return {scatter_rows(tape, band.sdf, band.active, sdf, 1), scatter_rows(tape, band.offset, band.active, off, 3)};
  };
  const auto surface = [&](const TetGrid& grid, Var sdf, Var off) {
    auto topo = std::make_shared<const MtTopology>(extract_topology(grid, tape.value(sdf)));
    auto tris = std::make_shared<const TriangleList>(topo->triangles);
    const Var pos = surface_positions(tape, grid, topo, sdf, off);
    return SceneGeometry{pos, vertex_normals(tape, pos, tris), tris};
  };

  const auto [hs, ho] = model_.high_outputs(tape, high_band_.active);
  const auto [hsdf, hoff] = assemble(high_band_, hs, ho);
  const SceneGeometry high = surface(model_.high_grid(), hsdf, hoff);
  const auto [ls, lo] = model_.low_outputs(tape, low_band_.active, bank_.tracked(k));
  const auto [lsdf, loff] = assemble(low_band_, ls, lo);
  const SceneGeometry low = surface(model_.low_grid(), lsdf, loff);

  const Var env = model_.env_texels(tape);
  const MaterialFn material = [this](Tape& t, Var p) { return model_.material(t, p); };
  RenderSettings settings;
  settings.shading.specular = config_.specular;
  const EnvLayout& layout = model_.env_layout();
  const RenderOutput Ik = render_view(tape, high, material, env, layout, train_cams_[k], settings);
  const RenderOutput Lk = render_view(tape, low, material, env, layout, train_cams_[k], settings);
  const RenderOutput Inv = render_view(tape, high, material, env, layout, vp.novel, settings);
  const RenderOutput Lnv = render_view(tape, low, material, env, layout, vp.novel, settings);

  std::vector<Real> denoised;
  if (providers_.denoiser->is_identity()) {
    denoised = copy_values(tape, Ik.rgb);
  } else {
    Image d = providers_.denoiser->denoise(to_image(tape, Ik.rgb, Wt, Ht, 3), request);
    denoised = std::move(d.data);
  }
  const Var Dk = substitute(tape, Ik.rgb, std::move(denoised));

  LossParts parts;
  parts.known = loss_known(tape,
                           {Dk, Lk.rgb, tape.constant(target_rgb_[k]), tape.constant(target_alpha_[k]), Ik.mask,
                            Lk.mask},
                           config_.symmetric_masks);
  parts.novel = loss_novel(tape, Inv.rgb, Lnv.rgb, Inv.mask, Lnv.mask, config_.symmetric_masks);
  parts.hed = loss_hed(tape,
                       {edge_proxy(tape, Dk, Wt, Ht, 3), edge_proxy(tape, Ik.normal, Wt, Ht, 3),
                        edge_proxy(tape, Lk.rgb, Wt, Ht, 3), edge_proxy(tape, Lk.normal, Wt, Ht, 3)},
                       tape.constant(target_hed_[k]));
  parts.eikonal = loss_eikonal(tape, model_.high_jvp(tape, std::move(eik_points)), 4, 0);

  StepMetrics m;
  m.step = step;
  m.view = k;
  m.known = tape.value(parts.known)[0];
  m.novel = tape.value(parts.novel)[0];
  m.hed = tape.value(parts.hed)[0];
  m.eikonal = tape.value(parts.eikonal)[0];
  m.high_vertices = tape.size(high.positions) / 3;
  m.low_vertices = tape.size(low.positions) / 3;
  m.high_active = high_band_.active ? high_band_.active->size() : model_.high_grid().vertex_count();
  m.low_active = low_band_.active ? low_band_.active->size() : model_.low_grid().vertex_count();

  try {
    total = total_loss(tape, parts, config_.weights);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNonFinite && !dump_dir_.empty()) {
      const fs::path dir = dump_dir_ / ("nonfinite_step_" + std::to_string(step));
      fs::create_directories(dir);
      std::ofstream(dir / "losses.txt") << format_metrics(m) << "\n";
      write_png(dir / "high_known.png", to_image(tape, Ik.rgb, Wt, Ht, 3));
      write_png(dir / "low_known.png", to_image(tape, Lk.rgb, Wt, Ht, 3));
      write_png(dir / "high_novel.png", to_image(tape, Inv.rgb, Wt, Ht, 3));
      write_png(dir / "low_novel.png", to_image(tape, Lnv.rgb, Wt, Ht, 3));
      fail(ErrorCode::kNonFinite, std::string(e.what()) + " (buffers dumped to " + dir.string() + ")");
    }
    throw;
  }
  m.total = tape.value(total)[0];
  return m;
}

void Trainer::save_state(Checkpoint& ckpt) const {
  if (high_band_.empty()) return;
  ckpt.set("cache.high.sdf", to_float(high_band_.sdf));
  ckpt.set("cache.high.offset", to_float(high_band_.offset));
  ckpt.set("cache.low.sdf", to_float(low_band_.sdf));
  ckpt.set("cache.low.offset", to_float(low_band_.offset));
}

void Trainer::load_state(const Checkpoint& ckpt) {
  if (!ckpt.find("cache.high.sdf")) return;
  const Real band = static_cast<Real>(config_.band_cells);
  const TetGrid& high = model_.high_grid();
  const TetGrid& low = model_.low_grid();
  const std::size_t nh = high.vertex_count(), nl = low.vertex_count();
  high_band_ = make_band(high,
                         state_from(from_section(ckpt, "cache.high.sdf", nh),
                                    from_section(ckpt, "cache.high.offset", 3 * nh), GridOrigin::kHigh),
                         band * high.cell_edge());
  low_band_ = make_band(low,
                        state_from(from_section(ckpt, "cache.low.sdf", nl),
                                   from_section(ckpt, "cache.low.offset", 3 * nl), GridOrigin::kLow),
                        band * low.cell_edge());
  bank_.track(rows_of(deformed_vertices(low, low_band_.offset), low_band_.active));
}

GridMeshes Trainer::extract(int reference) {
  GridMeshes out;
  out.high = grid_mesh(model_.high_grid(), model_.predict_high());
  const TetGrid& low = model_.low_grid();
  const std::vector<Real> prior = low_band_.empty() ? std::vector<Real>(3 * low.vertex_count(), 0) : low_band_.offset;
  out.low = grid_mesh(low, model_.predict_low(bank_.fuse(deformed_vertices(low, prior), reference)));
  return out;
}

TriMesh grid_mesh(const TetGrid& grid, const GridState& state) { return marching_tetrahedra(grid, state); }

ViewRender render_mesh(const Model& model, const TriMesh& mesh, const CameraView& cam, bool specular) {
  Tape tape;
  std::vector<Real> pos(3 * mesh.positions.size()), nrm(3 * mesh.positions.size());
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    const Vec3 n = i < mesh.normals.size() ? mesh.normals[i] : Vec3{0, 0, 1};
    for (int c = 0; c < 3; ++c) {
      pos[3 * i + c] = mesh.positions[i][c];
      nrm[3 * i + c] = n[c];
    }
  }
  SceneGeometry scene{tape.constant(std::move(pos)), tape.constant(std::move(nrm)),
                      std::make_shared<const TriangleList>(mesh.triangles)};
  RenderSettings settings;
  settings.shading.specular = specular;
  const MaterialFn material = [&model](Tape& t, Var p) { return model.material(t, p); };
  const RenderOutput out = render_view(tape, scene, material, model.env_texels(tape), model.env_layout(), cam, settings);
  return {to_image(tape, out.rgb, cam.width, cam.height, 3), to_image(tape, out.normal, cam.width, cam.height, 3),
          to_image(tape, out.mask, cam.width, cam.height, 1)};
}

Checkpoint make_checkpoint(const Model& model, const Trainer* trainer, int step) {
  Checkpoint ckpt;
  store_params(model.params(), ckpt);
  const std::string text = format_run_config(absolutized(model.config()));
  std::vector<float> bytes(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) bytes[i] = static_cast<float>(static_cast<unsigned char>(text[i]));
  ckpt.set("meta.config", std::move(bytes));
  ckpt.set("meta.step", {static_cast<float>(step)});
  if (trainer) trainer->save_state(ckpt);
  return ckpt;
}

void write_run_checkpoint(const fs::path& path, const Model& model, const Trainer* trainer, int step) {
  write_checkpoint(path, make_checkpoint(model, trainer, step));
}

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  const CheckpointSection* s = ckpt.find("meta.config");
  require(s != nullptr, ErrorCode::kConfig, "checkpoint has no stored run configuration");
  std::string text(s->data.size(), '\0');
  for (std::size_t i = 0; i < text.size(); ++i) text[i] = static_cast<char>(static_cast<int>(s->data[i]));
  return parse_run_config(text);
}

int checkpoint_step(const Checkpoint& ckpt) {
  const CheckpointSection* s = ckpt.find("meta.step");
  require(s != nullptr && s->data.size() == 1, ErrorCode::kConfig, "checkpoint has no step counter");
  return static_cast<int>(s->data[0]);
}

RunReport run_optimization(const RunConfig& config, const RunOptions& options) {
  require(!config.bundle.empty(), ErrorCode::kConfig, "config: bundle is required");
  RunReport report;
  const fs::path out = config.output;
  fs::create_directories(out);
  const SupervisionBundle bundle = load_bundle(config.bundle);
  const auto cams = known_cameras(config, bundle.view_count(), bundle.width(), bundle.height());

  Model model(config);
  int start = 0;
  Checkpoint resume;
  if (!options.resume.empty()) {
    resume = read_checkpoint(options.resume);
    load_params(model.params(), resume);
    start = checkpoint_step(resume);
  } else if (!options.skip_init) {
    report.init = init_grids(model, ShapeTemplate::parse(config.shape), config.init_iterations, config.init_points,
                             config.seed, options.log);
  }

  Trainer trainer(model, bundle, cams, make_providers(config, bundle.has_hed()));
  trainer.set_dump_dir(out);
  if (!options.resume.empty()) trainer.load_state(resume);

  report.loss_log = out / "losses.log";
  std::ofstream log(report.loss_log, options.resume.empty() ? std::ios::trunc : std::ios::app);
  require(static_cast<bool>(log), ErrorCode::kIo, "cannot write " + report.loss_log.string());
  for (int s = start; s < config.iterations; ++s) {
    const StepMetrics m = trainer.step(s);
    report.steps.push_back(m);
    log << format_metrics(m) << "\n";
    if (options.log && (s % config.log_every == 0 || s + 1 == config.iterations))
      *options.log << format_metrics(m) << " high_active=" << m.high_active << " low_active=" << m.low_active
                   << "\n";
    if (config.checkpoint_every > 0 && (s + 1) % config.checkpoint_every == 0 && s + 1 < config.iterations)
      write_run_checkpoint(out / ("checkpoint_" + std::to_string(s + 1) + ".g3dc"), model, &trainer, s + 1);
  }
  log.flush();

  report.checkpoint = out / "checkpoint.g3dc";
  write_run_checkpoint(report.checkpoint, model, &trainer, std::max(start, config.iterations));
  const GridMeshes meshes = trainer.extract(0);
  report.high_mesh = out / "mesh_high.obj";
  report.low_mesh = out / "mesh_low.obj";
  export_obj(meshes.high, report.high_mesh);
  export_obj(meshes.low, report.low_mesh);
  fs::create_directories(out / "renders");
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const ViewRender r = render_mesh(model, meshes.high,
                                     resized(cams[k], config.export_resolution,
                                             config.export_resolution * cams[k].height / cams[k].width),
                                     config.specular);
    const std::string id = std::to_string(k + 1);
    report.renders.push_back(out / "renders" / ("view_" + id + ".png"));
    write_png(report.renders.back(), r.rgb);
    write_png(out / "renders" / ("view_" + id + "_normal.png"), r.normal);
    write_png(out / "renders" / ("view_" + id + "_mask.png"), r.mask);
  }
  return report;
}

Vec3 fixture_albedo(const ShapeTemplate& shape, const Vec3& p) {
  const Vec3 skin{Real(0.85), Real(0.64), Real(0.5)};
  const Vec3 shirt{Real(0.15), Real(0.35), Real(0.75)};
  const Vec3 trousers{Real(0.3), Real(0.25), Real(0.2)};
  switch (shape.nearest_part(p)) {
    case 0: return shirt;
    case 4:
    case 5: return trousers;
    default: return skin;
  }
}

SupervisionBundle render_fixture(const ShapeTemplate& shape, const FixtureOptions& options) {
  const TetGrid grid = build_lattice(options.mesh_resolution);
  GridState state;
  state.sdf.resize(grid.vertex_count());
  for (std::size_t i = 0; i < grid.vertex_count(); ++i) state.sdf[i] = shape.sdf(grid.vertices[i]);
  const TriMesh mesh = grid_mesh(grid, state);
  const auto cams = make_turntable_cameras(options.views, options.radius, static_cast<Real>(options.fov_deg * kPi / 180),
                                           options.resolution, options.resolution);
  const EnvLayout layout;
  SupervisionBundle bundle;
  for (const auto& cam : cams) {
    Tape tape;
    std::vector<Real> pos(3 * mesh.positions.size()), nrm(3 * mesh.positions.size());
    for (std::size_t i = 0; i < mesh.positions.size(); ++i)
      for (int c = 0; c < 3; ++c) {
        pos[3 * i + c] = mesh.positions[i][c];
        nrm[3 * i + c] = mesh.normals[i][c];
      }
    SceneGeometry scene{tape.constant(std::move(pos)), tape.constant(std::move(nrm)),
                        std::make_shared<const TriangleList>(mesh.triangles)};
    const MaterialFn material = [&shape](Tape& t, Var points) {
      auto p = t.value(points);
      const std::size_t n = p.size() / 3;
      std::vector<Real> m(n * material::kChannels);
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 kd = fixture_albedo(shape, {p[3 * i], p[3 * i + 1], p[3 * i + 2]});
        const MaterialSample s{kd, 1, Real(0.6), 0, {0, 0, 0}};
        const auto one = constant_material(s, 1);
        std::copy(one.begin(), one.end(), m.begin() + i * material::kChannels);
      }
      return t.constant(std::move(m));
    };
    RenderSettings settings;
    settings.shading.specular = options.specular;
    const Var env = env_texels(tape, tape.constant(std::vector<Real>(layout.value_count(), env_raw_for(1))));
    const RenderOutput out = render_view(tape, scene, material, env, layout, cam, settings);
    bundle.images.push_back(to_image(tape, out.rgb, cam.width, cam.height, 3));
    bundle.alphas.push_back(to_image(tape, out.mask, cam.width, cam.height, 1));
  }
  return bundle;
}

G3D_NAMESPACE_END
