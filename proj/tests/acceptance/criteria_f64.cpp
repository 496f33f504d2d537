// Criteria that need double precision; built against g3d_f64.

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "../common/gradcheck.hpp"
#include "criteria.hpp"
#include "g3d/bsdf.hpp"
#include "g3d/fusion.hpp"
#include "g3d/hash_encoder.hpp"
#include "g3d/losses.hpp"
#include "g3d/marching_tets.hpp"
#include "g3d/mlp.hpp"
#include "g3d/render.hpp"
#include "g3d/shading.hpp"

static_assert(sizeof(g3d::Real) == 8, "criteria_f64.cpp must see the double-precision headers");

namespace g3d_acceptance_f64 {

using namespace g3d;
using g3d_acceptance::Outcome;
using g3d_test::check_gradient;
using g3d_test::GradCheck;
using g3d_test::make_group;
using g3d_test::project;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool wanted(const std::vector<std::string>& only, const std::string& name) {
  if (only.empty()) return true;
  for (const auto& o : only)
    if (o == name) return true;
  return false;
}

std::vector<Real> uniform(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Real> v(n);
  for (Real& x : v) x = u(rng);
  return v;
}

struct Family {
  std::string name;
  GradCheck result;
};

Family hash_family() {
  HashEncoderConfig c;
  c.levels = 4;
  c.log2_table_size = 9;
  c.base_resolution = 3;
  c.growth = 1.7;
  c.init_scale = 0.5;
  HashEncoder enc(c);
  ParamGroup table = make_group("table", enc.init_params(2));
  ParamGroup pts = make_group("pts", uniform(18, 3, -0.95, 0.95));
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) { return project(t, hash_encode(t, enc, v[0], v[1]), 4); };
  return {"hash", check_gradient({&table, &pts}, f, 12, 5)};
}

Family mlp_family() {
  ParamStore store;
  Mlp mlp(store, "toy", {3, 5, 2}, 1e-3, 3);
  std::vector<ParamGroup*> leaves;
  for (auto& g : store.groups()) leaves.push_back(g.get());
  ParamGroup x = make_group("x", uniform(12, 2, -0.95, 0.95));
  leaves.push_back(&x);
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) {
    return project(t, mlp.forward(t, v.back()), 7);
  };
  return {"mlp", check_gradient(leaves, f, 4, 8)};
}

Family fusion_family() {
  const int K = 4, C = 5, n = 3;
  std::vector<Real> s = uniform(n * K * C, 10, -0.7, 2.3);
  ParamGroup g = make_group("samples", s);
  std::vector<std::uint8_t> valid(n * K, 1);
  valid[5] = 0;
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) {
    return project(t, fuse_features(t, v[0], K, C, 2, valid), 3);
  };
  return {"fusion", check_gradient({&g}, f, 20, 6)};
}

std::vector<Family> loss_families() {
  const std::size_t n = 24;
  ParamGroup a = make_group("a", uniform(n, 40, 0.05, 0.95));
  ParamGroup b = make_group("b", uniform(n, 41, 0.05, 0.95));
  ParamGroup m = make_group("m", uniform(n, 42, 0.1, 0.9));
  ParamGroup k = make_group("k", uniform(n, 43, 0.1, 0.9));
  const auto G = uniform(n, 44, 0.05, 0.95);
  std::vector<Family> out;
  const auto run = [&](const std::string& name, const g3d_test::LossFn& f, std::uint64_t seed) {
    out.push_back({name, check_gradient({&a, &b, &m, &k}, f, 3, seed)});
  };
  run("loss_known", [&](Tape& t, const std::vector<Var>& v) {
        return loss_known(t, {v[0], v[1], t.constant(G), v[2], v[3], v[2]});
      }, 50);
  run("loss_novel", [](Tape& t, const std::vector<Var>& v) { return loss_novel(t, v[0], v[1], v[2], v[3]); }, 51);
  run("loss_hed", [](Tape& t, const std::vector<Var>& v) { return loss_hed(t, {v[0], v[1], v[2]}, v[3]); }, 52);
  run("loss_total", [](Tape& t, const std::vector<Var>& v) {
        return total_loss(t, {smape(t, v[0], v[1]), mse(t, v[1], v[2]), mse(t, v[2], v[3]), sum(t, v[3])},
                          {1, 0.5, 0.2, 0.01});
      }, 53);
  ParamGroup jvp = make_group("jvp", uniform(12 * 8, 45, -2, 2));
  g3d_test::LossFn eik = [](Tape& t, const std::vector<Var>& v) { return loss_eikonal(t, v[0], 3, 1); };
  out.push_back({"loss_eikonal", check_gradient({&jvp}, eik, 10, 60)});
  return out;
}

TriMesh sphere_mesh(int res, Real r) {
  const TetGrid g = build_lattice(res);
  GridState s;
  s.sdf.resize(g.vertex_count());
  for (std::size_t i = 0; i < g.vertex_count(); ++i) s.sdf[i] = norm(g.vertices[i]) - r;
  return marching_tetrahedra(g, s);
}

std::vector<Real> flatten(const std::vector<Vec3>& v) {
  std::vector<Real> out;
  for (const Vec3& p : v) out.insert(out.end(), {p.x, p.y, p.z});
  return out;
}

Family shading_family() {
  HashEncoderConfig hc;
  hc.levels = 3;
  hc.log2_table_size = 8;
  hc.base_resolution = 2;
  hc.growth = 2;
  hc.init_scale = 0.5;
  HashEncoder enc(hc);
  ParamStore store;
  ParamGroup& table = store.add("tex.hash", enc.init_params(3), 1e-3);
  Mlp mlp(store, "tex.mlp", {enc.output_dim(), 8, 9}, 1e-3, 4);
  const EnvLayout layout{8, 4};
  store.add("env", uniform(layout.value_count(), 6, -0.5, 1), 1e-2);
  const TriMesh m = sphere_mesh(12, 0.55);
  const CameraView cam = make_orbit_camera(20, 10, 3, 40, 16, 16, 1);
  std::vector<ParamGroup*> leaves;
  for (auto& g : store.groups()) leaves.push_back(g.get());
  ParamGroup& env = *leaves.back();
  const MaterialFn mat = [&](Tape& t, Var p) {
    return activate_material(t, mlp.forward(t, hash_encode(t, enc, t.parameter(table), p)));
  };
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>&) {
    const SceneGeometry scene{t.constant(flatten(m.positions)), t.constant(flatten(m.normals)),
                              std::make_shared<const TriangleList>(m.triangles)};
    // Pre-tonemap radiance of covered pixels: the interior shading path.
    const RenderOutput out = render_view(t, scene, mat, env_texels(t, t.parameter(env)), layout, cam);
    return project(t, out.radiance, 21);
  };
  return {"interior_shading", check_gradient(leaves, f, 5, 9, 1e-5)};
}

Family mt_family() {
  const TetGrid g = build_lattice(3);
  std::vector<Real> sdf0(g.vertex_count());
  for (std::size_t i = 0; i < g.vertex_count(); ++i) sdf0[i] = norm(g.vertices[i]) - 0.62;
  ParamGroup sdf = make_group("sdf", sdf0);
  std::vector<Real> off0 = uniform(3 * g.vertex_count(), 5, -0.2, 0.2);
  for (Real& x : off0) x *= g.cell_edge();
  ParamGroup off = make_group("off", off0);
  auto topo = std::make_shared<const MtTopology>(extract_topology(g, sdf.value));
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) {
    return project(t, surface_positions(t, g, topo, v[0], v[1]), 11);
  };
  return {"mt_positions", check_gradient({&sdf, &off}, f, 15, 17)};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::vector<Family> all{hash_family(), mlp_family(), fusion_family()};
  for (auto& f : loss_families()) all.push_back(std::move(f));
  all.push_back(shading_family());
  all.push_back(mt_family());
  int cases = 0;
  double worst = 0;
  std::ostringstream d;
  for (const Family& f : all) {
    cases += f.result.cases;
    worst = std::max(worst, f.result.max_rel);
    d << " " << f.name << "=" << f.result.max_rel << "/" << f.result.cases;
  }
  const double s = since(t0);
  std::ostringstream head;
  head << "max_rel=" << worst << " (<=1e-4) cases=" << cases << " (<=200) time=" << s << "s (<60s) |" << d.str();
  return {"gradient_suite", worst <= 1e-4 && cases <= 200 && s < 60, head.str(), s};
}

Outcome formula_pins() {
  const auto t0 = Clock::now();
  const double e_smape = std::abs(smape_value(std::vector<Real>{1}, std::vector<Real>{0}) - 1 / 1.01);
  const double e_ggx = std::abs(ggx_distribution(1, 0.25) - 1 / (kPi * 0.0625));
  double e_ks = 0;
  for (const Vec3& kd : {Vec3{0.3, 0.6, 0.9}, Vec3{1, 1, 1}, Vec3{0, 0, 0}}) {
    const Vec3 ks = specular_color(kd, 0);
    for (int c = 0; c < 3; ++c) e_ks = std::max(e_ks, std::abs(ks[c] - 0.04));
  }
  const std::vector<Real> cond{0.3, -1.2, 4.5}, uncond{0.7, 2.0, -3.0};
  const auto cfg = cfg_combine(cond, uncond, 0);
  double e_cfg = 0;
  for (int i = 0; i < 3; ++i) e_cfg = std::max(e_cfg, std::abs(cfg[i] - cond[i]));
  std::ostringstream d;
  d << "smape=" << e_smape << " ggx=" << e_ggx << " k_s=" << e_ks << " cfg=" << e_cfg << " (each <=1e-9)";
  const bool pass = e_smape <= 1e-9 && e_ggx <= 1e-9 && e_ks <= 1e-9 && e_cfg <= 1e-9;
  return {"formula_pins", pass, d.str(), since(t0)};
}

Outcome eikonal_property() {
  const auto t0 = Clock::now();
  // s(p) = x has unit gradient everywhere; scaling the derivative blocks by 2 doubles it.
  const std::size_t n = 500;
  const auto pts = uniform(3 * n, 13, -1, 1);
  auto jvp = identity_jvp(pts);
  Tape t;
  const double unit = t.value(loss_eikonal(t, t.constant(jvp), 3, 0))[0];
  for (std::size_t i = 3 * n; i < jvp.size(); ++i) jvp[i] *= 2;
  const double doubled = t.value(loss_eikonal(t, t.constant(jvp), 3, 0))[0];
  std::ostringstream d;
  d << "unit=" << unit << " (<=1e-8) doubled=" << doubled << " (1+-1e-6)";
  return {"eikonal", unit <= 1e-8 && std::abs(doubled - 1) <= 1e-6, d.str(), since(t0)};
}

}  // namespace

std::vector<Outcome> run_double_criteria(const std::vector<std::string>& only) {
  std::vector<Outcome> out;
  if (wanted(only, "gradient_suite")) out.push_back(gradient_suite());
  if (wanted(only, "formula_pins")) out.push_back(formula_pins());
  if (wanted(only, "eikonal")) out.push_back(eikonal_property());
  return out;
}

}  // namespace g3d_acceptance_f64
