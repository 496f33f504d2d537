#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "../common/gradcheck.hpp"
#include "g3d/error.hpp"
#include "g3d/marching_tets.hpp"
#include "g3d/model.hpp"
#include "g3d/pipeline.hpp"
#include "g3d/providers.hpp"
#include "g3d/shape_template.hpp"

using namespace g3d;

namespace {

RunConfig tiny_config(int low, int high) {
  RunConfig c;
  c.low_resolution = low;
  c.high_resolution = high;
  for (HashEncoderConfig* e : {&c.geometry_encoder, &c.texture_encoder}) {
    e->levels = 4;
    e->log2_table_size = 10;
    e->base_resolution = 4;
    e->growth = 1.5;
  }
  c.env_width = 8;
  c.env_height = 4;
  c.eikonal_points = 64;
  c.render_resolution = 16;
  c.iterations = 50;
  return c;
}

std::vector<Real> snapshot(const ParamStore& store) {
  std::vector<Real> all;
  for (const auto& g : store.groups()) all.insert(all.end(), g->value.begin(), g->value.end());
  return all;
}

const SupervisionBundle& small_fixture() {
  static const SupervisionBundle bundle = [] {
    FixtureOptions o;
    o.views = 3;
    o.mesh_resolution = 32;
    return render_fixture(ShapeTemplate::mannequin(), o);
  }();
  return bundle;
}

Trainer make_trainer(Model& model, const RunConfig& c) {
  const SupervisionBundle& b = small_fixture();
  return Trainer(model, b, known_cameras(c, b.view_count(), b.width(), b.height()), make_providers(c, b.has_hed()));
}

// Capsule surface samples: cylinder wall plus both hemispherical caps.
std::vector<Vec3> capsule_samples(const Capsule& c, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> nd;
  const Vec3 axis = c.b - c.a;
  const Real len = norm(axis);
  const Vec3 ax = normalize(axis);
  Vec3 e1 = normalize(cross(ax, std::abs(ax.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}));
  const Vec3 e2 = cross(ax, e1);
  std::vector<Vec3> out;
  out.reserve(n);
  const double wall = 2 * kPi * c.radius * len, caps = 4 * kPi * c.radius * c.radius;
  for (int i = 0; i < n; ++i) {
    if (u(rng) < wall / (wall + caps)) {
      const double phi = 2 * kPi * u(rng);
      out.push_back(c.a + ax * Real(len * u(rng)) + (e1 * Real(std::cos(phi)) + e2 * Real(std::sin(phi))) * c.radius);
    } else {
      Vec3 d = normalize(Vec3{Real(nd(rng)), Real(nd(rng)), Real(nd(rng))});
      const bool top = dot(d, ax) > 0;
      out.push_back((top ? c.b : c.a) + d * c.radius);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("pseudo sdf examples") {
  const ShapeTemplate s = ShapeTemplate::sphere(0.5);
  CHECK(s.sdf({0, 0, 0}) == doctest::Approx(-0.5));
  CHECK(s.sdf({1, 0, 0}) == doctest::Approx(0.5));
  CHECK(ShapeTemplate::parse("sphere:0.25").sdf({0, 0, 0}) == doctest::Approx(-0.25));
  CHECK(ShapeTemplate::mannequin().parts().size() == 6);
  CHECK_THROWS_AS(ShapeTemplate::parse("cube"), Error);
}

TEST_CASE("capsule sdf agrees with dense surface sampling") {
  const Capsule cap{{-0.2, -0.3, 0.1}, {0.25, 0.35, -0.05}, 0.18};
  const auto samples = capsule_samples(cap, 100000, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int i = 0; i < 40; ++i) {
    const Vec3 p{Real(u(rng)), Real(u(rng)), Real(u(rng))};
    double best = 1e9;
    for (const Vec3& q : samples) best = std::min<double>(best, norm(p - q));
    CHECK(std::abs(std::abs(cap.sdf(p)) - best) <= 1e-3);
  }
}

TEST_CASE("mesh templates: sign by winding, non-watertight input rejected") {
  TriMesh open;
  open.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  open.triangles = {{0, 1, 2}};
  try {
    ShapeTemplate::from_mesh(open);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
  const TetGrid g = build_lattice(16);
  GridState s;
  for (const Vec3& v : g.vertices) s.sdf.push_back(norm(v) - Real(0.6));
  const ShapeTemplate t = ShapeTemplate::from_mesh(marching_tetrahedra(g, s));
  CHECK(t.sdf({0, 0, 0}) < -0.5);
  CHECK(t.sdf({0.9, 0, 0}) == doctest::Approx(0.3).epsilon(0.05));
  CHECK(t.nearest_part({0, 0, 0}) == -1);
}

TEST_CASE("viewpoint sampling") {
  RunConfig c;
  const int K = 6, draws = 10000;
  std::vector<int> count(K, 0);
  for (int s = 0; s < draws; ++s) {
    Rng a(7, s, 1), b(7, s, 1);
    const Viewpoints va = sample_viewpoints(a, K, c, 32, 32), vb = sample_viewpoints(b, K, c, 32, 32);
    REQUIRE(va.known == vb.known);
    REQUIRE(va.novel_azimuth == vb.novel_azimuth);
    ++count[va.known];
    CHECK(va.novel_elevation >= -20);
    CHECK(va.novel_elevation <= 40);
  }
  const double expected = double(draws) / K, sigma = std::sqrt(draws * (1.0 / K) * (1 - 1.0 / K));
  double chi2 = 0;
  for (int k = 0; k < K; ++k) {
    CHECK(std::abs(count[k] - expected) <= 3 * sigma);
    chi2 += (count[k] - expected) * (count[k] - expected) / expected;
  }
  CHECK(chi2 < 20.5);  // chi-square, 5 dof, p = 0.001
}

TEST_CASE("builtin features: shape, determinism, locality") {
  Image a(512, 512, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (Real& x : a.data) x = Real(u(rng));
  const FeatureMap fa = builtin_features(a), fb = builtin_features(a);
  CHECK(fa.width == 128);
  CHECK(fa.height == 128);
  CHECK(fa.channels == 256);
  CHECK(fa.data == fb.data);

  Image b = a;
  for (int y = 100; y < 116; ++y)
    for (int x = 300; x < 316; ++x)
      for (int c = 0; c < 3; ++c) b.at(x, y, c) = 1 - b.at(x, y, c);
  const FeatureMap fc = builtin_features(b);
  // The patch covers feature texels 75..79 x 25..29. Far texels are untouched.
  int changed_near = 0, changed_far = 0;
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) {
      double d = 0;
      for (int c = 0; c < 256; ++c) d += std::abs(fa.at(x, y, c) - fc.at(x, y, c));
      const bool near = x >= 60 && x < 95 && y >= 10 && y < 45;
      if (d > 1e-9) (near ? changed_near : changed_far)++;
    }
  CHECK(changed_near > 0);
  CHECK(changed_far == 0);

  Image wrong(256, 256, 3);
  CHECK_THROWS_AS(builtin_features(wrong), Error);
}

TEST_CASE("model: networks have the documented shapes and registry") {
  const RunConfig c = tiny_config(4, 8);
  Model m(c);
  CHECK(m.high_mlp().widths() == std::vector<int>{m.geometry_encoder().output_dim(), 64, 64, 4});
  CHECK(m.low_mlp().widths() == std::vector<int>{256, 64, 64, 4});
  CHECK(m.texture_mlp().widths() == std::vector<int>{m.texture_encoder().output_dim(), 64, 64, 9});
  CHECK(m.base_sdf().size() == m.low_grid().vertex_count());
  std::set<std::string> names;
  for (const auto& g : m.params().groups()) CHECK(names.insert(g->name).second);
}

TEST_CASE("model: residual structure of the low grid") {
  const RunConfig c = tiny_config(4, 8);
  Model m(c);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (Real& s : m.base_sdf().value) s = Real(nd(rng));
  const std::size_t N = m.low_grid().vertex_count();
  std::vector<Real> fused(N * kFeatureChannels);
  for (Real& x : fused) x = Real(nd(rng));
  // Zero low network: base values and no offsets.
  const GridState z = m.predict_low(fused);
  CHECK(z.sdf == m.base_sdf().value);
  for (const Vec3& o : z.offset) CHECK(o == Vec3{});

  // Same parameters twice: same states.
  CHECK(m.predict_high().sdf == m.predict_high().sdf);

  // Perturbing one fused channel moves only the low grid.
  for (auto& g : m.params().groups())
    if (g->name.rfind("low.mlp", 0) == 0)
      for (Real& v : g->value) v = Real(0.1 * nd(rng));
  const GridState high0 = m.predict_high();
  const GridState low0 = m.predict_low(fused);
  fused[5 * kFeatureChannels + 17] += 3;
  const GridState high1 = m.predict_high();
  const GridState low1 = m.predict_low(fused);
  CHECK(high0.sdf == high1.sdf);
  CHECK(high0.offset == high1.offset);
  CHECK(low0.sdf[5] != low1.sdf[5]);
  CHECK(low0.sdf[6] == low1.sdf[6]);
  // Offsets stay within half a cell by construction.
  const Real h = m.low_grid().cell_edge();
  for (const Vec3& o : low1.offset)
    for (int d = 0; d < 3; ++d) CHECK(std::abs(o[d]) <= h / 2);
}

TEST_CASE("model: zeroing the high network's last layer gives a constant sdf") {
  Model m(tiny_config(4, 6));
  const Mlp& mlp = m.high_mlp();
  std::fill(mlp.weight(2).value.begin(), mlp.weight(2).value.end(), 0);
  mlp.bias(2).value[0] = Real(0.37);
  const GridState s = m.predict_high();
  for (Real v : s.sdf) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("init: zero iterations leave parameters unchanged") {
  Model m(tiny_config(4, 6));
  const auto before = snapshot(m.params());
  init_grids(m, ShapeTemplate::sphere(0.5), 0, 100, 1);
  CHECK(snapshot(m.params()) == before);
}

TEST_CASE("init: sphere template fits both grids") {
  RunConfig c = tiny_config(16, 24);
  c.geometry_encoder.levels = 8;
  c.geometry_encoder.log2_table_size = 14;
  Model m(c);
  const Real r = 0.5;
  init_grids(m, ShapeTemplate::sphere(r), 600, 2000, 3);
  const TriMesh mesh = grid_mesh(m.high_grid(), m.predict_high());
  REQUIRE(!mesh.empty());
  const Real h = m.high_grid().cell_edge();
  std::size_t ok = 0;
  for (const Vec3& p : mesh.positions) ok += std::abs(norm(p) - r) <= 2 * h;
  CHECK(double(ok) / mesh.positions.size() >= 0.99);
  std::size_t ok_low = 0;
  const TetGrid& low = m.low_grid();
  for (std::size_t i = 0; i < low.vertex_count(); ++i)
    ok_low += std::abs(m.base_sdf().value[i] - (norm(low.vertices[i]) - r)) <= 1e-2;
  CHECK(double(ok_low) / low.vertex_count() >= 0.95);
}

TEST_CASE("train step: zero loss weights leave parameters unchanged") {
  RunConfig c = tiny_config(6, 8);
  c.weights = {0, 0, 0, 0};
  Model m(c);
  init_grids(m, ShapeTemplate::mannequin(), 20, 500, 1);
  Trainer t = make_trainer(m, c);
  const auto before = snapshot(m.params());
  for (int s = 0; s < 3; ++s) t.step(s);
  CHECK(snapshot(m.params()) == before);
  for (const auto& g : m.params().groups()) CHECK(g->step == 3);
}

TEST_CASE("train step: known-view loss decreases on the self-consistent fixture") {
  RunConfig c = tiny_config(12, 16);
  Model m(c);
  init_grids(m, ShapeTemplate::mannequin(), 300, 2000, 1);
  Trainer t = make_trainer(m, c);
  const auto known_at = [&](int s) {
    Tape tape;
    Var total;
    return t.evaluate(tape, s, total);
  };
  double before = 0, after = 0;
  for (int s = 0; s < 3; ++s) before += known_at(s).known;
  std::vector<double> seen;
  for (int s = 0; s < 50; ++s) {
    const StepMetrics m1 = t.step(s);
    CHECK(std::isfinite(m1.known));
    CHECK(std::isfinite(m1.total));
  }
  for (int s = 0; s < 3; ++s) after += known_at(s).known;
  CHECK(after < before);
}

TEST_CASE("train step: identical seeds give identical loss sequences") {
  const auto run = [] {
    RunConfig c = tiny_config(6, 8);
    c.seed = 11;
    Model m(c);
    init_grids(m, ShapeTemplate::mannequin(), 30, 500, c.seed);
    Trainer t = make_trainer(m, c);
    std::vector<std::string> lines;
    for (int s = 0; s < 12; ++s) lines.push_back(format_metrics(t.step(s)));
    return lines;
  };
  CHECK(run() == run());
}

TEST_CASE("full pipeline gradient matches finite differences") {
  RunConfig c = tiny_config(4, 4);
  c.render_resolution = 8;
  c.band_cells = 0;
  c.eikonal_points = 16;
  Model m(c);
  init_grids(m, ShapeTemplate::mannequin(), 50, 200, 2);
  Trainer t = make_trainer(m, c);
  {
    Tape warm;  // fills the caches so later evaluations do not refresh
    Var total;
    t.evaluate(warm, 1, total);
  }
  std::vector<ParamGroup*> leaves;
  for (const auto& g : m.params().groups()) leaves.push_back(g.get());
  g3d_test::LossFn f = [&](Tape& tape, const std::vector<Var>&) {
    Var total;
    t.evaluate(tape, 1, total);
    return total;
  };
  // Three per group over the seven groups: 21 sampled parameters.
  const auto r = g3d_test::check_gradient(leaves, f, 3, 99, 1e-6, 1e-4);
  CAPTURE(r.worst_leaf);
  CAPTURE(r.worst_analytic);
  CAPTURE(r.worst_numeric);
  CHECK(r.cases == 3 * int(leaves.size()));
  CHECK(r.max_rel <= 1e-4);
}

}  // TEST_SUITE
