#include "g3d/model.hpp"

#include <algorithm>
#include <cmath>

#include "g3d/error.hpp"
#include "g3d/marching_tets.hpp"
#include "g3d/ops.hpp"
#include "g3d/shading.hpp"

G3D_NAMESPACE_BEGIN

namespace {

constexpr std::size_t kChunk = 8192;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Real logit(Real p) { return std::log(p / (1 - p)); }

std::vector<Real> lattice_points(const TetGrid& grid, std::span<const std::uint32_t> rows) {
  std::vector<Real> pts(rows.size() * 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vec3& v = grid.vertices[rows[i]];
    pts[3 * i] = v.x;
    pts[3 * i + 1] = v.y;
    pts[3 * i + 2] = v.z;
  }
  return pts;
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  return rows;
}

// Writes raw network outputs (n x 4) into a grid state.
void fill_state(GridState& state, std::size_t offset, std::span<const Real> raw, Real half_edge,
                std::span<const Real> base) {
  const std::size_t n = raw.size() / 4;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t v = offset + i;
    state.sdf[v] = raw[4 * i] + (base.empty() ? Real(0) : base[v]);
    state.offset[v] = {half_edge * std::tanh(raw[4 * i + 1]), half_edge * std::tanh(raw[4 * i + 2]),
                       half_edge * std::tanh(raw[4 * i + 3])};
  }
}

}  // namespace

Model::Model(const RunConfig& config)
    : config_(config),
      low_grid_(build_lattice(config.low_resolution)),
      high_grid_(build_lattice(config.high_resolution)),
      geometry_encoder_(config.geometry_encoder),
      texture_encoder_(config.texture_encoder),
      env_layout_{config.env_width, config.env_height} {
  const Real mlp_lr = static_cast<Real>(config.mlp_lr), grid_lr = static_cast<Real>(config.grid_lr);
  geometry_table_ = &params_.add("high.hash", geometry_encoder_.init_params(mix_seed(config.seed, 1)), mlp_lr);
  high_mlp_ = Mlp(params_, "high.mlp", {geometry_encoder_.output_dim(), 64, 64, 4}, mlp_lr, mix_seed(config.seed, 2));
  {
    // Offsets start at zero so the initial lattice is undeformed.
    const int L = high_mlp_.layer_count() - 1;
    ParamGroup& w = high_mlp_.weight(L);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (i % 4 != 0) w.value[i] = 0;
    for (int j = 1; j < 4; ++j) high_mlp_.bias(L).value[j] = 0;
  }
  low_mlp_ = Mlp(params_, "low.mlp", {kFeatureChannels, 64, 64, 4}, mlp_lr, mix_seed(config.seed, 3), true);
  base_sdf_ = &params_.add("low.sdf", std::vector<Real>(low_grid_.vertex_count(), 0), grid_lr);
  texture_table_ = &params_.add("tex.hash", texture_encoder_.init_params(mix_seed(config.seed, 4)), mlp_lr);
  texture_mlp_ = Mlp(params_, "tex.mlp", {texture_encoder_.output_dim(), 64, 64, material::kChannels}, mlp_lr,
                     mix_seed(config.seed, 5));
  {
    // Material prior: grey albedo, little occlusion, dielectric, no normal perturbation.
    const int L = texture_mlp_.layer_count() - 1;
    auto& b = texture_mlp_.bias(L).value;
    std::fill(b.begin(), b.end(), Real(0));
    b[material::kOcclusion] = logit(Real(0.95));
    b[material::kMetalness] = logit(Real(0.05));
    ParamGroup& w = texture_mlp_.weight(L);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (static_cast<int>(i % material::kChannels) >= material::kKn) w.value[i] = 0;
  }
  env_raw_ = &params_.add("env", std::vector<Real>(env_layout_.value_count(), env_raw_for(1)), grid_lr);
}

std::vector<Real> Model::high_raw(std::span<const Real> points) const {
  const std::size_t n = points.size() / 3;
  std::vector<Real> out(n * 4);
  for (std::size_t b = 0; b < n; b += kChunk) {
    const std::size_t e = std::min(n, b + kChunk);
    Tape tape;
    const Var pts = tape.constant({points.begin() + 3 * b, points.begin() + 3 * e});
    const Var enc = hash_encode(tape, geometry_encoder_, tape.parameter(*geometry_table_), pts);
    auto raw = tape.value(high_mlp_.forward(tape, enc));
    std::copy(raw.begin(), raw.end(), out.begin() + 4 * b);
  }
  return out;
}

GridState Model::predict_high() const {
  const std::size_t N = high_grid_.vertex_count();
  GridState s;
  s.origin = GridOrigin::kHigh;
  s.sdf.resize(N);
  s.offset.resize(N);
  const Real half = high_grid_.cell_edge() / 2;
  for (std::size_t b = 0; b < N; b += kChunk) {
    const std::size_t e = std::min(N, b + kChunk);
    std::vector<Real> pts(3 * (e - b));
    for (std::size_t i = b; i < e; ++i) {
      pts[3 * (i - b)] = high_grid_.vertices[i].x;
      pts[3 * (i - b) + 1] = high_grid_.vertices[i].y;
      pts[3 * (i - b) + 2] = high_grid_.vertices[i].z;
    }
    fill_state(s, b, high_raw(pts), half, {});
  }
  return s;
}

GridState Model::predict_low(std::span<const Real> fused) const {
  const std::size_t N = low_grid_.vertex_count();
  require(fused.size() == N * kFeatureChannels, ErrorCode::kShapeMismatch, "predict_low: need N x 256 features");
  GridState s;
  s.origin = GridOrigin::kLow;
  s.sdf.resize(N);
  s.offset.resize(N);
  const Real half = low_grid_.cell_edge() / 2;
  for (std::size_t b = 0; b < N; b += kChunk) {
    const std::size_t e = std::min(N, b + kChunk);
    Tape tape;
    const Var x = tape.constant({fused.begin() + b * kFeatureChannels, fused.begin() + e * kFeatureChannels});
    fill_state(s, b, tape.value(low_mlp_.forward(tape, x)), half, base_sdf_->value);
  }
  return s;
}

std::pair<Var, Var> Model::high_outputs(Tape& tape,
                                        const std::shared_ptr<const std::vector<std::uint32_t>>& rows) const {
  const std::vector<Real> pts =
      rows ? lattice_points(high_grid_, *rows) : lattice_points(high_grid_, all_rows(high_grid_.vertex_count()));
  const Var enc = hash_encode(tape, geometry_encoder_, tape.parameter(*geometry_table_), tape.constant(pts));
  const Var out = high_mlp_.forward(tape, enc);
  return {columns(tape, out, 4, 0, 1), tanh_scale(tape, columns(tape, out, 4, 1, 3), high_grid_.cell_edge() / 2)};
}

std::pair<Var, Var> Model::low_outputs(Tape& tape, const std::shared_ptr<const std::vector<std::uint32_t>>& rows,
                                       std::vector<Real> fused) const {
  const std::size_t m = rows ? rows->size() : low_grid_.vertex_count();
  require(fused.size() == m * kFeatureChannels, ErrorCode::kShapeMismatch, "low_outputs: need m x 256 features");
  const Var out = low_mlp_.forward(tape, tape.constant(std::move(fused)));
  Var base = tape.parameter(*base_sdf_);
  if (rows) base = gather_rows(tape, base, rows, 1);
  return {add(tape, columns(tape, out, 4, 0, 1), base),
          tanh_scale(tape, columns(tape, out, 4, 1, 3), low_grid_.cell_edge() / 2)};
}

Var Model::high_jvp(Tape& tape, std::vector<Real> points) const {
  const Var enc = hash_encode_jvp(tape, geometry_encoder_, tape.parameter(*geometry_table_),
                                  tape.constant(std::move(points)));
  return high_mlp_.forward_jvp(tape, enc);
}

Var Model::material(Tape& tape, Var points) const {
  const Var enc = hash_encode(tape, texture_encoder_, tape.parameter(*texture_table_), points);
  return activate_material(tape, texture_mlp_.forward(tape, enc));
}

Var Model::env_texels(Tape& tape) const { return g3d::env_texels(tape, tape.parameter(*env_raw_)); }

FeatureBank::FeatureBank(std::vector<FeatureMap> maps, std::vector<CameraView> cams)
    : maps_(std::move(maps)), cams_(std::move(cams)) {
  require(!maps_.empty() && maps_.size() == cams_.size(), ErrorCode::kInvalidArgument,
          "feature bank: one feature map per known camera required");
  for (const auto& m : maps_)
    require(m.channels == kFeatureChannels, ErrorCode::kShapeMismatch,
            "feature maps must have 256 channels, got " + std::to_string(m.channels));
}

std::vector<Real> FeatureBank::fuse(std::span<const Vec3> points, int r, FusionStats* stats) const {
  const std::size_t n = points.size();
  const int C = channels();
  std::vector<Real> out(n * C);
  constexpr std::size_t chunk = 2048;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = std::min(n, b + chunk);
    std::vector<std::uint8_t> valid;
    const auto coords = project_to_maps(cams_, maps_, points.subspan(b, e - b), valid);
    const ViewSamples samples = sample_views(maps_, coords, valid, e - b);
    const auto fused = fuse_all(samples, r, kFusionAlpha, stats);
    std::copy(fused.begin(), fused.end(), out.begin() + b * C);
  }
  return out;
}

void FeatureBank::track(std::vector<Vec3> points) {
  tracked_points_ = std::move(points);
  tracked_fused_.assign(maps_.size(), {});
  tracked_ready_.assign(maps_.size(), false);
}

const std::vector<Real>& FeatureBank::tracked(int r) {
  require(r >= 0 && r < views(), ErrorCode::kInvalidArgument, "feature bank: reference view out of range");
  if (!tracked_ready_[r]) {
    tracked_fused_[r] = fuse(tracked_points_, r, &stats_);
    tracked_ready_[r] = true;
  }
  return tracked_fused_[r];
}

BandCache make_band(const TetGrid& grid, const GridState& full, Real band) {
  BandCache c;
  c.sdf = full.sdf;
  c.offset.resize(3 * full.offset.size());
  for (std::size_t i = 0; i < full.offset.size(); ++i) {
    c.offset[3 * i] = full.offset[i].x;
    c.offset[3 * i + 1] = full.offset[i].y;
    c.offset[3 * i + 2] = full.offset[i].z;
  }
  if (band <= 0) return c;
  std::vector<std::uint8_t> keep(full.sdf.size(), 0);
  for (std::size_t i = 0; i < full.sdf.size(); ++i) keep[i] = std::abs(full.sdf[i]) < band;
  for (const auto& e : extract_topology(grid, full.sdf).edges) keep[e[0]] = keep[e[1]] = 1;
  auto rows = std::make_shared<std::vector<std::uint32_t>>();
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) rows->push_back(static_cast<std::uint32_t>(i));
  c.active = std::move(rows);
  return c;
}

std::vector<Vec3> deformed_vertices(const TetGrid& grid, std::span<const Real> offset) {
  std::vector<Vec3> p(grid.vertex_count());
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = grid.vertices[i] + Vec3{offset[3 * i], offset[3 * i + 1], offset[3 * i + 2]};
  return p;
}

G3D_NAMESPACE_END
