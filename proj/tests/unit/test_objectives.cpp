#include <doctest.h>

#include <cmath>
#include <random>

#include "../common/gradcheck.hpp"
#include "g3d/edge_proxy.hpp"
#include "g3d/error.hpp"
#include "g3d/losses.hpp"

using namespace g3d;

namespace {

std::vector<Real> random_image(std::size_t n, std::uint64_t seed, double lo = 0.05, double hi = 0.95) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Real> v(n);
  for (Real& x : v) x = Real(u(rng));
  return v;
}

Real value(Tape& t, Var v) { return t.value(v)[0]; }

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("smape examples") {
  Tape t;
  const Var x = t.constant(random_image(20, 1));
  CHECK(value(t, smape(t, x, x)) == 0);
  CHECK(std::abs(value(t, smape(t, t.constant({1}), t.constant({0}))) - 1 / 1.01) < 1e-9);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const std::vector<Real> a{Real(u(rng))}, b{Real(u(rng))};
    CHECK(smape_value(a, b) < 1);
  }
}

TEST_CASE("known-view loss examples") {
  Tape t;
  const std::size_t n = 12;
  const auto G = random_image(n, 3);
  const auto A = random_image(n, 4, 0, 1);
  KnownViewImages same{t.constant(G), t.constant(G), t.constant(G), t.constant(A), t.constant(A), t.constant(A)};
  CHECK(value(t, loss_known(t, same)) == 0);

  const Real c = 0.3;
  KnownViewImages toy{t.constant({c}), t.constant({c}), t.constant({0}),
                      t.constant({1}), t.constant({1}), t.constant({1})};
  CHECK(value(t, loss_known(t, toy)) == doctest::Approx(2 * c * c + 2 * c / (c + 0.01)).epsilon(1e-12));

  // Monotone as the denoised image moves toward the target.
  const auto I0 = random_image(n, 5);
  const auto Ilow = random_image(n, 6);
  double prev = 1e30;
  for (int s = 0; s <= 10; ++s) {
    std::vector<Real> I(n);
    for (std::size_t i = 0; i < n; ++i) I[i] = I0[i] + (G[i] - I0[i]) * Real(s) / 10;
    KnownViewImages v{t.constant(I), t.constant(Ilow), t.constant(G), t.constant(A), t.constant(A), t.constant(A)};
    const double l = value(t, loss_known(t, v));
    CHECK(l < prev + 1e-15);
    prev = l;
  }
}

TEST_CASE("novel-view loss examples") {
  Tape t;
  const auto I = random_image(9, 7), M = random_image(9, 8, 0, 1);
  CHECK(value(t, loss_novel(t, t.constant(I), t.constant(I), t.constant(M), t.constant(M))) == 0);
  CHECK(std::abs(value(t, loss_novel(t, t.constant({1}), t.constant({0}), t.constant({1}), t.constant({1}))) -
                 (1 + 1 / 1.01)) < 1e-9);
  const auto J = random_image(9, 9), N = random_image(9, 10, 0, 1);
  for (bool sym : {false, true}) {
    const double a = value(t, loss_novel(t, t.constant(I), t.constant(J), t.constant(M), t.constant(N), sym));
    const double b = value(t, loss_novel(t, t.constant(J), t.constant(I), t.constant(N), t.constant(M), sym));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("boundary loss examples") {
  Tape t;
  const auto H = random_image(16, 11);
  std::vector<Var> maps(4, t.constant(H));
  CHECK(value(t, loss_hed(t, maps, t.constant(H))) == 0);
  std::vector<Var> chi{t.constant({0.2}), t.constant({0.4}), t.constant({0.2}), t.constant({0.4})};
  CHECK(value(t, loss_hed(t, chi, t.constant({0.3}))) == doctest::Approx(0.04).epsilon(1e-12));
  // Zero target reduces to the mean energy of the maps.
  const auto X = random_image(16, 12);
  std::vector<Var> e{t.constant(X)};
  double energy = 0;
  for (Real x : X) energy += double(x) * x / X.size();
  CHECK(value(t, loss_hed(t, e, t.constant(std::vector<Real>(16, 0)))) == doctest::Approx(energy).epsilon(1e-12));
  CHECK_THROWS_AS(loss_hed(t, e, Var{}), Error);
}

TEST_CASE("eikonal loss examples") {
  Tape t;
  const auto p = random_image(3 * 50, 13, -1, 1);
  auto jvp = identity_jvp(p);
  CHECK(value(t, loss_eikonal(t, t.constant(jvp), 3, 0)) <= 1e-8);
  for (std::size_t i = 3 * 50; i < jvp.size(); ++i) jvp[i] *= 2;
  CHECK(std::abs(value(t, loss_eikonal(t, t.constant(jvp), 3, 0)) - 1) <= 1e-6);
  const auto r = random_image(12 * 10, 14, -2, 2);
  CHECK(value(t, loss_eikonal(t, t.constant(r), 3, 1)) >= 0);
}

TEST_CASE("total loss examples") {
  Tape t;
  LossParts zero{t.constant({0}), t.constant({0}), t.constant({0}), t.constant({0})};
  CHECK(value(t, total_loss(t, zero, {})) == 0);
  LossParts p{t.constant({0.5}), t.constant({0.2}), t.constant({1.0}), t.constant({4.0})};
  CHECK(value(t, total_loss(t, p, {1, 0, 0, 0})) == doctest::Approx(0.5));
  CHECK(value(t, total_loss(t, p, {1, 1, 0.2, 0.01})) == doctest::Approx(0.94).epsilon(1e-12));
  // Linear in each part.
  LossParts q = p;
  q.hed = t.constant({3.0});
  CHECK(value(t, total_loss(t, q, {1, 1, 0.2, 0.01})) - value(t, total_loss(t, p, {1, 1, 0.2, 0.01})) ==
        doctest::Approx(0.2 * 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(total_loss(t, p, {-1, 1, 1, 1}), Error);
  LossParts bad = p;
  bad.novel = t.constant({std::nan("")});
  CHECK_THROWS_AS(total_loss(t, bad, {}), Error);
}

TEST_CASE("cfg_combine examples") {
  const std::vector<Real> c{0.3, -1.2}, u{0.7, 2.0};
  CHECK(cfg_combine(c, u, 0) == c);
  for (Real w : {0.5, 7.5, 100.0}) {
    const auto r = cfg_combine(c, c, w);
    for (int i = 0; i < 2; ++i) CHECK(r[i] == doctest::Approx(c[i]).epsilon(1e-12));
  }
  CHECK(cfg_combine(std::vector<Real>{1}, std::vector<Real>{0}, 100)[0] == doctest::Approx(101));
}

TEST_CASE("edge proxy examples") {
  const int W = 16, H = 16;
  const auto flat = edge_proxy(std::vector<Real>(W * H * 3, 0.4), W, H, 3);
  for (Real v : flat) CHECK(std::abs(v) < 1e-12);

  std::vector<Real> step(W * H, 0);
  for (int y = 0; y < H; ++y)
    for (int x = W / 2; x < W; ++x) step[y * W + x] = 1;
  const auto e = edge_proxy(step, W, H, 1);
  for (int y = 0; y < H; ++y) {
    int best = 0;
    for (int x = 1; x < W; ++x)
      if (e[y * W + x] > e[y * W + best]) best = x;
    CHECK(std::abs(best - (W / 2 - 0.5)) <= 1);
  }

  const auto img = random_image(W * H, 15, 0, 1);
  std::vector<Real> rot(W * H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) rot[x * W + (W - 1 - y)] = img[y * W + x];  // 90 degrees
  const auto a = edge_proxy(img, W, H, 1), b = edge_proxy(rot, W, H, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) CHECK(b[x * W + (W - 1 - y)] == doctest::Approx(a[y * W + x]).epsilon(1e-9));

  for (std::uint64_t s = 0; s < 5; ++s) {
    std::vector<Real> extreme = random_image(W * H * 3, 20 + s, 0, 1);
    for (Real& x : extreme) x = x > 0.5 ? 1 : 0;
    for (const auto& im : {random_image(W * H * 3, 30 + s, 0, 1), extreme})
      for (Real v : edge_proxy(im, W, H, 3)) {
        CHECK(v >= 0);
        CHECK(v <= 1);
      }
  }
}

TEST_CASE("loss gradients match central differences") {
  const std::size_t n = 24;
  ParamGroup a = g3d_test::make_group("a", random_image(n, 40));
  ParamGroup b = g3d_test::make_group("b", random_image(n, 41));
  ParamGroup m = g3d_test::make_group("m", random_image(n, 42, 0.1, 0.9));
  ParamGroup k = g3d_test::make_group("k", random_image(n, 43, 0.1, 0.9));
  const auto G = random_image(n, 44);
  const std::vector<g3d_test::LossFn> fns = {
      [](Tape& t, const std::vector<Var>& v) { return mse(t, v[0], v[1]); },
      [](Tape& t, const std::vector<Var>& v) { return smape(t, v[0], v[1]); },
      [&](Tape& t, const std::vector<Var>& v) {
        return loss_known(t, {v[0], v[1], t.constant(G), v[2], v[3], v[2]});
      },
      [&](Tape& t, const std::vector<Var>& v) {
        return loss_known(t, {v[0], v[1], t.constant(G), v[2], v[3], v[2]}, true);
      },
      [](Tape& t, const std::vector<Var>& v) { return loss_novel(t, v[0], v[1], v[2], v[3]); },
      [](Tape& t, const std::vector<Var>& v) { return loss_novel(t, v[0], v[1], v[2], v[3], true); },
      [](Tape& t, const std::vector<Var>& v) { return loss_hed(t, {v[0], v[1], v[2]}, v[3]); },
      [](Tape& t, const std::vector<Var>& v) {
        return total_loss(t, {mse(t, v[0], v[1]), smape(t, v[2], v[3]), mse(t, v[1], v[2]), sum(t, v[3])},
                          {1, 0.5, 0.2, 0.01});
      },
  };
  for (std::size_t i = 0; i < fns.size(); ++i) {
    CAPTURE(i);
    CHECK(g3d_test::check_gradient({&a, &b, &m, &k}, fns[i], 6, 50 + i).max_rel <= 1e-4);
  }

  ParamGroup jvp = g3d_test::make_group("jvp", random_image(12 * 8, 45, -2, 2));
  g3d_test::LossFn eik = [](Tape& t, const std::vector<Var>& v) { return loss_eikonal(t, v[0], 3, 1); };
  CHECK(g3d_test::check_gradient({&jvp}, eik, 40, 60).max_rel <= 1e-4);

  ParamGroup img = g3d_test::make_group("img", random_image(10 * 9 * 3, 46, 0, 1));
  g3d_test::LossFn edge = [](Tape& t, const std::vector<Var>& v) {
    return g3d_test::project(t, edge_proxy(t, v[0], 10, 9, 3), 61);
  };
  CHECK(g3d_test::check_gradient({&img}, edge, 40, 62).max_rel <= 1e-4);
}

}  // TEST_SUITE
