#include <doctest.h>

#include <cmath>
#include <random>

#include "../common/gradcheck.hpp"
#include "g3d/error.hpp"
#include "g3d/hash_encoder.hpp"
#include "g3d/mlp.hpp"
#include "g3d/ops.hpp"
#include "g3d/param_store.hpp"
#include "g3d/tape.hpp"

using namespace g3d;
using g3d_test::check_gradient;
using g3d_test::make_group;
using g3d_test::project;

namespace {

HashEncoderConfig small_encoder() {
  HashEncoderConfig c;
  c.levels = 4;
  c.log2_table_size = 9;
  c.base_resolution = 3;
  c.growth = 1.7;
  c.init_scale = Real(0.5);
  return c;
}

std::vector<Real> random_points(std::size_t n, std::uint64_t seed, double lo = -0.95, double hi = 0.95) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Real> p(3 * n);
  for (Real& x : p) x = Real(u(rng));
  return p;
}

}  // namespace

TEST_SUITE("neural-core") {

TEST_CASE("hash encoding: default width, determinism") {
  HashEncoder enc;
  CHECK(enc.output_dim() == 32);
  const auto table = enc.init_params(1);
  CHECK(table.size() == enc.param_count());
  std::vector<Real> a(32), b(32);
  enc.encode(table, {0.1, -0.3, 0.7}, a);
  enc.encode(table, {0.1, -0.3, 0.7}, b);
  CHECK(a == b);
  enc.encode(table, {5, -5, 0.2}, b);  // outside the cube still gives 32 values
  CHECK(b.size() == 32);
}

TEST_CASE("hash encoding: point gradient matches central differences") {
  HashEncoder enc(small_encoder());
  ParamGroup table = make_group("table", enc.init_params(2));
  ParamGroup pts = make_group("pts", random_points(6, 3));
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) {
    return project(t, hash_encode(t, enc, v[0], v[1]), 4);
  };
  const auto r = check_gradient({&table, &pts}, f, 15, 5);
  CHECK(r.max_rel <= 1e-4);
}

TEST_CASE("hash encoding: default encoder point gradient within 1e-3 at step 1e-4") {
  HashEncoder enc;
  ParamGroup table = make_group("table", enc.init_params(9));
  for (Real& x : table.value) x *= 1000;  // visible features
  // A point whose +-1e-4 neighbourhood stays inside one cell at every level.
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  Vec3 p;
  for (bool aligned = true; aligned;) {
    p = {Real(u(rng)), Real(u(rng)), Real(u(rng))};
    aligned = false;
    for (int l = 0; l < enc.config().levels; ++l)
      for (int d = 0; d < 3; ++d) {
        const double s = enc.level_resolution(l) / 2.0;
        aligned |= std::floor((p[d] - 1e-4 + 1) * s) != std::floor((p[d] + 1e-4 + 1) * s);
      }
  }
  ParamGroup pts = make_group("pts", {p.x, p.y, p.z});
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) {
    return project(t, hash_encode(t, enc, v[0], v[1]), 6);
  };
  const auto r = check_gradient({&table, &pts}, f, 3, 1, 1e-4);
  CHECK(r.max_rel <= 1e-3);
}

TEST_CASE("hash encoding: jvp blocks equal the spatial derivatives") {
  HashEncoder enc(small_encoder());
  const auto table = enc.init_params(4);
  const auto p = random_points(5, 8);
  const int D = enc.output_dim();
  std::vector<Real> jvp(4 * 5 * D);
  enc.encode_jvp_batch(table, p, jvp);
  std::vector<Real> plain(5 * D);
  enc.encode_batch(table, p, plain);
  for (int i = 0; i < 5 * D; ++i) CHECK(jvp[i] == doctest::Approx(plain[i]).epsilon(1e-12));
  const double h = 1e-6;
  for (int n = 0; n < 5; ++n)
    for (int d = 0; d < 3; ++d) {
      Vec3 q{p[3 * n], p[3 * n + 1], p[3 * n + 2]};
      std::vector<Real> up(D), down(D);
      Vec3 a = q, b = q;
      a[d] += h;
      b[d] -= h;
      enc.encode(table, a, up);
      enc.encode(table, b, down);
      for (int c = 0; c < D; ++c) {
        const double fd = (up[c] - down[c]) / (2 * h);
        CHECK(g3d_test::relative_error(jvp[(1 + d) * 5 * D + n * D + c], fd) <= 1e-4);
      }
    }
}

TEST_CASE("hash encoding: jvp op table gradient matches central differences") {
  HashEncoder enc(small_encoder());
  ParamGroup table = make_group("table", enc.init_params(6));
  const auto p = random_points(4, 12);
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) {
    return project(t, hash_encode_jvp(t, enc, v[0], t.constant(p)), 13);
  };
  const auto r = check_gradient({&table}, f, 40, 7);
  CHECK(r.max_rel <= 1e-4);
}

TEST_CASE("hash encoding is piecewise trilinear") {
  HashEncoder enc(small_encoder());
  const auto table = enc.init_params(3);
  const int D = enc.output_dim();
  const Real h = Real(1e-3);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 50; ++trial) {
    const Vec3 p{Real(u(rng)), Real(u(rng)), Real(u(rng))};
    for (int d = 0; d < 3; ++d) {
      // Skip triples that straddle a cell boundary at any level.
      bool same = true;
      for (int l = 0; l < enc.config().levels; ++l) {
        const Real s = Real(enc.level_resolution(l)) / 2;
        same &= std::floor((p[d] - h + 1) * s) == std::floor((p[d] + h + 1) * s);
      }
      if (!same) continue;
      Vec3 a = p, b = p;
      a[d] -= h;
      b[d] += h;
      std::vector<Real> fa(D), fp(D), fb(D);
      enc.encode(table, a, fa);
      enc.encode(table, p, fp);
      enc.encode(table, b, fb);
      for (int c = 0; c < D; ++c) CHECK(std::abs(fa[c] - 2 * fp[c] + fb[c]) <= 1e-8);
      ++tested;
    }
  }
  CHECK(tested >= 20);
}

TEST_CASE("mlp: zero parameters give zero output") {
  ParamStore store;
  Mlp mlp(store, "m", {3, 5, 2}, 1e-3, 1);
  for (auto& g : store.groups()) std::fill(g->value.begin(), g->value.end(), 0);
  const auto y = mlp.eval(std::vector<Real>{1, 2, 3});
  CHECK(y == std::vector<Real>{0, 0});
}

TEST_CASE("mlp: identity single layer passes the input through") {
  ParamStore store;
  Mlp mlp(store, "id", {4, 4}, 1e-3, 1);
  auto& w = mlp.weight(0).value;
  std::fill(w.begin(), w.end(), 0);
  for (int i = 0; i < 4; ++i) w[i * 4 + i] = 1;
  std::fill(mlp.bias(0).value.begin(), mlp.bias(0).value.end(), 0);
  const std::vector<Real> x{-1.5, 0.25, 3, -7};
  CHECK(mlp.eval(x) == x);
  Tape tape;
  const Var y = mlp.forward(tape, tape.constant(x));
  CHECK(std::vector<Real>(tape.value(y).begin(), tape.value(y).end()) == x);
}

TEST_CASE("mlp: widths and zeroed output layer") {
  ParamStore store;
  Mlp a(store, "a", {32, 64, 64, 4}, 1e-3, 2, true);
  CHECK(a.widths() == std::vector<int>{32, 64, 64, 4});
  CHECK(a.layer_count() == 3);
  CHECK(a.activation(0) == Activation::kRelu);
  CHECK(a.activation(2) == Activation::kLinear);
  for (Real v : a.weight(2).value) CHECK(v == 0);
  CHECK_THROWS_AS(Mlp(store, "a", {1, 1}, 1e-3, 1), Error);
}

TEST_CASE("mlp: [3,5,2] weight gradients match central differences") {
  ParamStore store;
  Mlp mlp(store, "toy", {3, 5, 2}, 1e-3, 3);
  std::vector<ParamGroup*> leaves;
  for (auto& g : store.groups()) leaves.push_back(g.get());
  const std::vector<Real> x = random_points(4, 2);  // 4 rows of width 3
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>&) { return sum(t, mlp.forward(t, t.constant(x))); };
  const auto r = check_gradient(leaves, f, 10, 8);
  CHECK(r.max_rel <= 1e-4);
}

TEST_CASE("mlp: input gradients and eval agree with the tape") {
  ParamStore store;
  Mlp mlp(store, "toy", {3, 7, 7, 2}, 1e-3, 4);
  ParamGroup x = make_group("x", random_points(5, 3));
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>& v) { return project(t, mlp.forward(t, v[0]), 1); };
  CHECK(check_gradient({&x}, f, 15, 2).max_rel <= 1e-4);
  Tape tape;
  const Var y = mlp.forward(tape, tape.constant(x.value));
  for (int row = 0; row < 5; ++row) {
    const auto e = mlp.eval(std::span<const Real>(x.value).subspan(3 * row, 3));
    CHECK(e[0] == doctest::Approx(tape.value(y)[2 * row]).epsilon(1e-12));
    CHECK(e[1] == doctest::Approx(tape.value(y)[2 * row + 1]).epsilon(1e-12));
  }
}

TEST_CASE("mlp: forward_jvp tangents and parameter gradients") {
  ParamStore store;
  Mlp mlp(store, "j", {3, 6, 6, 2}, 1e-3, 5);
  std::vector<ParamGroup*> leaves;
  for (auto& g : store.groups()) leaves.push_back(g.get());
  const std::size_t n = 3;
  const auto p = random_points(n, 77);
  // Input blocks: value p and the identity tangents of the coordinates.
  std::vector<Real> x4(4 * n * 3, 0);
  for (std::size_t i = 0; i < 3 * n; ++i) x4[i] = p[i];
  for (int d = 0; d < 3; ++d)
    for (std::size_t i = 0; i < n; ++i) x4[(1 + d) * n * 3 + i * 3 + d] = 1;
  Tape tape;
  const Var y4 = mlp.forward_jvp(tape, tape.constant(x4));
  const auto out = tape.value(y4);
  const double h = 1e-6;
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) {
      std::vector<Real> a(p.begin() + 3 * i, p.begin() + 3 * i + 3), b = a;
      a[d] += h;
      b[d] -= h;
      const auto ya = mlp.eval(a), yb = mlp.eval(b);
      for (int c = 0; c < 2; ++c)
        CHECK(g3d_test::relative_error(out[(1 + d) * n * 2 + i * 2 + c], (ya[c] - yb[c]) / (2 * h)) <= 1e-4);
    }
  g3d_test::LossFn f = [&](Tape& t, const std::vector<Var>&) {
    return project(t, mlp.forward_jvp(t, t.constant(x4)), 9);
  };
  CHECK(check_gradient(leaves, f, 8, 10).max_rel <= 1e-4);
}

TEST_CASE("mlp: positively homogeneous in the last layer") {
  ParamStore store;
  Mlp mlp(store, "h", {3, 8, 8, 3}, 1e-3, 6);
  auto& b = mlp.bias(2).value;
  std::fill(b.begin(), b.end(), 0);
  const std::vector<Real> x{0.3, -0.2, 0.9};
  const auto y1 = mlp.eval(x);
  for (Real& w : mlp.weight(2).value) w *= Real(2.5);
  const auto y2 = mlp.eval(x);
  for (int i = 0; i < 3; ++i) CHECK(y2[i] == doctest::Approx(2.5 * y1[i]).epsilon(1e-12));
}

TEST_CASE("tape: constant loss has zero gradients") {
  ParamGroup p = make_group("p", {1, 2, 3});
  Tape tape;
  const Var v = tape.parameter(p);
  (void)v;
  const Var c = tape.constant({4});
  tape.backward(c);
  for (Real g : tape.gradient(v)) CHECK(g == 0);
}

TEST_CASE("tape: sum of squares gives twice the parameters") {
  ParamGroup p = make_group("p", {1, -2, 0.5});
  Tape tape;
  const Var v = tape.parameter(p);
  CHECK(tape.parameter(p).index == v.index);
  const Var loss = sum(tape, mul(tape, v, v));
  tape.backward(loss);
  const auto g1 = std::vector<Real>(tape.gradient(v).begin(), tape.gradient(v).end());
  CHECK(g1 == std::vector<Real>{2, -4, 1});
  CHECK(p.grad == g1);
  tape.backward(loss);  // repeatable
  CHECK(std::vector<Real>(tape.gradient(v).begin(), tape.gradient(v).end()) == g1);
}

TEST_CASE("tape: foreign vars are rejected") {
  Tape a, b;
  const Var v = a.constant({1});
  try {
    (void)b.gradient(v);
    FAIL("expected kNotOnTape");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotOnTape);
  }
}

TEST_CASE("ops: gradients match central differences") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  auto rnd = [&](std::size_t n) {
    std::vector<Real> v(n);
    for (Real& x : v) x = Real(nd(rng));
    return v;
  };
  ParamGroup a = make_group("a", rnd(12)), b = make_group("b", rnd(12)), w = make_group("w", rnd(4));
  auto rows = std::make_shared<const std::vector<std::uint32_t>>(std::vector<std::uint32_t>{3, 0, 2});
  const std::vector<g3d_test::LossFn> fns = {
      [](Tape& t, const std::vector<Var>& v) { return project(t, add(t, v[0], v[1]), 1); },
      [](Tape& t, const std::vector<Var>& v) { return project(t, mul(t, v[0], v[1]), 2); },
      [](Tape& t, const std::vector<Var>& v) { return project(t, scale_shift(t, v[0], 1.7, -0.3), 3); },
      [](Tape& t, const std::vector<Var>& v) { return mean(t, v[0]); },
      [](Tape& t, const std::vector<Var>& v) { return project(t, columns(t, v[0], 3, 1, 2), 4); },
      [](Tape& t, const std::vector<Var>& v) { return project(t, tanh_scale(t, v[0], 0.4), 5); },
      [](Tape& t, const std::vector<Var>& v) { return project(t, mul_rows(t, v[0], v[2], 3), 6); },
      [&](Tape& t, const std::vector<Var>& v) { return project(t, gather_rows(t, v[0], rows, 3), 7); },
      [&](Tape& t, const std::vector<Var>& v) {
        return project(t, scatter_rows(t, std::vector<Real>(12, 0.5), rows, gather_rows(t, v[1], rows, 3), 3), 8);
      },
      [](Tape& t, const std::vector<Var>& v) {
        return linear_combination(t, {mean(t, v[0]), sum(t, v[1])}, {0.25, 2});
      },
  };
  for (std::size_t i = 0; i < fns.size(); ++i) {
    CAPTURE(i);
    CHECK(check_gradient({&a, &b, &w}, fns[i], 4, 40 + i).max_rel <= 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  ParamStore store;
  ParamGroup& g = store.add("p", {1, 2}, Real(0.01));
  adam_step(store);
  CHECK(g.value == std::vector<Real>{1, 2});
  CHECK(g.step == 1);
  // Moments decay under zero gradient.
  g.m = {0.5, -0.5};
  g.v = {0.25, 0.25};
  adam_step(g);
  CHECK(g.m[0] == doctest::Approx(0.45));
  CHECK(g.v[0] == doctest::Approx(0.25 * 0.999));
}

TEST_CASE("adam: constant gradient moves against its sign") {
  ParamStore store;
  ParamGroup& g = store.add("p", {0, 0}, Real(0.01));
  for (int i = 0; i < 50; ++i) {
    g.grad = {3, -0.2};
    adam_step(store);
  }
  CHECK(g.value[0] < 0);
  CHECK(g.value[1] > 0);
}

TEST_CASE("adam: first step has magnitude lr") {
  ParamStore store;
  ParamGroup& g = store.add("p", {0.5}, Real(0.01));
  g.grad = {1};
  adam_step(store);
  CHECK(g.value[0] == doctest::Approx(0.49).epsilon(1e-6));
}

TEST_CASE("adam: non-finite gradient skips the group") {
  ParamStore store;
  ParamGroup& g = store.add("p", {0.5}, Real(0.01));
  g.grad = {std::nan("")};
  const AdamReport r = adam_step(store);
  CHECK(r.groups_skipped == 1);
  CHECK(g.value[0] == 0.5);
  CHECK(g.skipped_steps == 1);
}

TEST_CASE("param store: names are unique") {
  ParamStore store;
  store.add("x", {1}, 1);
  CHECK_THROWS_AS(store.add("x", {2}, 1), Error);
  CHECK(store.contains("x"));
  CHECK(store.total_size() == 1);
}

}  // TEST_SUITE
