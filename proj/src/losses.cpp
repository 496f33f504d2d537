#include "g3d/losses.hpp"

#include <cmath>
#include <string>

#include "g3d/error.hpp"
#include "g3d/ops.hpp"

G3D_NAMESPACE_BEGIN

namespace {

void same_size(const Tape& t, Var a, Var b, const char* what) {
  require(t.size(a) == t.size(b), ErrorCode::kShapeMismatch, std::string(what) + ": shape mismatch");
}

Var masked(Tape& tape, Var image, Var mask) {
  return mul_rows(tape, image, mask, static_cast<int>(tape.size(image) / tape.size(mask)));
}

}  // namespace

Var mse(Tape& tape, Var a, Var b) {
  same_size(tape, a, b, "mse");
  auto va = tape.value(a), vb = tape.value(b);
  const std::size_t n = va.size();
  require(n > 0, ErrorCode::kShapeMismatch, "mse: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(va[i] - vb[i]) * (va[i] - vb[i]);
  return tape.record({static_cast<Real>(acc / n)}, {a, b}, [a, b, n](Tape& t, Var self) {
    const Real g = t.grad(self)[0] * 2 / static_cast<Real>(n);
    auto va = t.value(a), vb = t.value(b);
    if (t.requires_grad(a)) {
      auto ga = t.grad(a);
      for (std::size_t i = 0; i < n; ++i) ga[i] += g * (va[i] - vb[i]);
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad(b);
      for (std::size_t i = 0; i < n; ++i) gb[i] -= g * (va[i] - vb[i]);
    }
  });
}

Real smape_value(std::span<const Real> a, std::span<const Real> b) {
  require(a.size() == b.size() && !a.empty(), ErrorCode::kShapeMismatch, "smape: shape mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::abs(static_cast<double>(a[i]) - b[i]) / (std::abs(static_cast<double>(a[i])) + std::abs(b[i]) + kSmapeEps);
  return static_cast<Real>(acc / a.size());
}

Var smape(Tape& tape, Var a, Var b) {
  same_size(tape, a, b, "smape");
  const std::size_t n = tape.size(a);
  const Real value = smape_value(tape.value(a), tape.value(b));
  return tape.record({value}, {a, b}, [a, b, n](Tape& t, Var self) {
    const Real g = t.grad(self)[0] / static_cast<Real>(n);
    auto va = t.value(a), vb = t.value(b);
    const bool want_a = t.requires_grad(a), want_b = t.requires_grad(b);
    std::span<Real> ga = want_a ? t.grad(a) : std::span<Real>{};
    std::span<Real> gb = want_b ? t.grad(b) : std::span<Real>{};
    for (std::size_t i = 0; i < n; ++i) {
      const Real d = va[i] - vb[i];
      if (d == 0) continue;
      const Real den = std::abs(va[i]) + std::abs(vb[i]) + kSmapeEps;
      const Real num = std::abs(d);
      const Real sd = d > 0 ? Real(1) : Real(-1);
      auto sgn = [](Real x) { return x > 0 ? Real(1) : (x < 0 ? Real(-1) : Real(0)); };
      // d/da |a-b| / den = sign(d)/den - |d| sign(a)/den^2.
      if (want_a) ga[i] += g * (sd / den - num * sgn(va[i]) / (den * den));
      if (want_b) gb[i] += g * (-sd / den - num * sgn(vb[i]) / (den * den));
    }
  });
}

Var loss_known(Tape& tape, const KnownViewImages& v, bool symmetric_masks) {
  const Var t1 = mse(tape, v.denoised, v.target);
  const Var t3 = mse(tape, v.low, v.target);
  Var t2, t4;
  if (!symmetric_masks) {
    t2 = smape(tape, masked(tape, v.denoised, v.alpha), masked(tape, v.target, v.mask_high));
    t4 = smape(tape, masked(tape, v.low, v.alpha), masked(tape, v.target, v.mask_low));
  } else {
    t2 = smape(tape, masked(tape, v.denoised, v.mask_high), masked(tape, v.target, v.alpha));
    t4 = smape(tape, masked(tape, v.low, v.mask_low), masked(tape, v.target, v.alpha));
  }
  return linear_combination(tape, {t1, t2, t3, t4}, {1, 1, 1, 1});
}

Var loss_novel(Tape& tape, Var high, Var low, Var mask_high, Var mask_low, bool symmetric_masks) {
  const Var t1 = mse(tape, high, low);
  const Var t2 = symmetric_masks ? smape(tape, masked(tape, high, mask_high), masked(tape, low, mask_low))
                                 : smape(tape, masked(tape, high, mask_low), masked(tape, low, mask_high));
  return linear_combination(tape, {t1, t2}, {1, 1});
}

Var loss_hed(Tape& tape, const std::vector<Var>& maps, Var target) {
  require(target.valid(), ErrorCode::kInvalidArgument, "loss_hed: missing target boundary map");
  std::vector<Var> terms;
  for (Var m : maps) terms.push_back(mse(tape, m, target));
  return linear_combination(tape, terms, std::vector<Real>(terms.size(), 1));
}

Var loss_eikonal(Tape& tape, Var jvp, int width, int column) {
  const std::size_t stride = 4 * static_cast<std::size_t>(width);
  require(tape.size(jvp) % stride == 0 && column >= 0 && column < width, ErrorCode::kShapeMismatch,
          "loss_eikonal: buffer layout");
  const std::size_t n = tape.size(jvp) / stride;
  require(n > 0, ErrorCode::kShapeMismatch, "loss_eikonal: no points");
  auto v = tape.value(jvp);
  auto at = [n, width, column](std::size_t block, std::size_t i) { return (block * n + i) * width + column; };
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gx = v[at(1, i)], gy = v[at(2, i)], gz = v[at(3, i)];
    const double e = std::sqrt(gx * gx + gy * gy + gz * gz) - 1;
    acc += e * e;
  }
  return tape.record({static_cast<Real>(acc / n)}, {jvp}, [jvp, n, at](Tape& t, Var self) {
    const Real g = t.grad(self)[0] / static_cast<Real>(n);
    auto v = t.value(jvp);
    auto gv = t.grad(jvp);
    for (std::size_t i = 0; i < n; ++i) {
      const Real gx = v[at(1, i)], gy = v[at(2, i)], gz = v[at(3, i)];
      const Real len = std::sqrt(gx * gx + gy * gy + gz * gz);
      if (len == 0) continue;
      const Real s = g * 2 * (len - 1) / len;
      gv[at(1, i)] += s * gx;
      gv[at(2, i)] += s * gy;
      gv[at(3, i)] += s * gz;
    }
  });
}

std::vector<Real> identity_jvp(std::span<const Real> points) {
  const std::size_t n = points.size() / 3;
  std::vector<Real> out(12 * n, 0);
  std::copy(points.begin(), points.end(), out.begin());
  for (int axis = 0; axis < 3; ++axis)
    for (std::size_t i = 0; i < n; ++i) out[((axis + 1) * n + i) * 3 + axis] = 1;
  return out;
}

Var total_loss(Tape& tape, const LossParts& parts, const LossWeights& w) {
  const Var v[4] = {parts.known, parts.novel, parts.hed, parts.eikonal};
  const char* names[4] = {"known", "novel", "hed", "eikonal"};
  const Real lambda[4] = {w.known, w.novel, w.hed, w.eikonal};
  std::vector<Var> terms;
  std::vector<Real> weights;
  for (int i = 0; i < 4; ++i) {
    require(std::isfinite(lambda[i]) && lambda[i] >= 0, ErrorCode::kInvalidArgument,
            std::string("loss weight for ") + names[i] + " must be finite and non-negative");
    if (!v[i].valid()) continue;
    const Real x = tape.value(v[i])[0];
    require(std::isfinite(x), ErrorCode::kNonFinite, std::string("non-finite ") + names[i] + " loss");
    terms.push_back(v[i]);
    weights.push_back(lambda[i]);
  }
  return linear_combination(tape, terms, weights);
}

std::vector<Real> cfg_combine(std::span<const Real> eps_cond, std::span<const Real> eps_uncond, Real omega) {
  require(eps_cond.size() == eps_uncond.size(), ErrorCode::kShapeMismatch, "cfg_combine: shape mismatch");
  std::vector<Real> out(eps_cond.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1 + omega) * eps_cond[i] - omega * eps_uncond[i];
  return out;
}

G3D_NAMESPACE_END
