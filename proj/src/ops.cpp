#include "g3d/ops.hpp"

#include <cmath>
#include <string>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {
void same_size(const Tape& tape, Var a, Var b, const char* op) {
  require(tape.size(a) == tape.size(b), ErrorCode::kShapeMismatch, std::string(op) + ": size mismatch");
}
}  // namespace

Var add(Tape& tape, Var a, Var b) {
  same_size(tape, a, b, "add");
  auto va = tape.value(a), vb = tape.value(b);
  std::vector<Real> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    auto g = t.grad(self);
    for (Var in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      auto gi = t.grad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var mul(Tape& tape, Var a, Var b) {
  same_size(tape, a, b, "mul");
  auto va = tape.value(a), vb = tape.value(b);
  std::vector<Real> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    auto g = t.grad(self);
    auto va = t.value(a), vb = t.value(b);
    if (t.requires_grad(a)) {
      auto ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Tape& tape, Var a, Real s) {
  auto va = tape.value(a);
  std::vector<Real> out(va.begin(), va.end());
  for (Real& x : out) x *= s;
  return tape.record(std::move(out), {a}, [a, s](Tape& t, Var self) {
    auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var scale_shift(Tape& tape, Var a, Real s, Real b) {
  auto va = tape.value(a);
  std::vector<Real> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * s + b;
  return tape.record(std::move(out), {a}, [a, s](Tape& t, Var self) {
    auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var sum(Tape& tape, Var a) {
  double acc = 0;
  for (Real x : tape.value(a)) acc += x;
  return tape.record({static_cast<Real>(acc)}, {a}, [a](Tape& t, Var self) {
    const Real g = t.grad(self)[0];
    for (Real& x : t.grad(a)) x += g;
  });
}

Var mean(Tape& tape, Var a) {
  const std::size_t n = tape.size(a);
  require(n > 0, ErrorCode::kShapeMismatch, "mean of an empty buffer");
  return scale(tape, sum(tape, a), Real(1) / static_cast<Real>(n));
}

Var linear_combination(Tape& tape, const std::vector<Var>& scalars, const std::vector<Real>& weights) {
  require(scalars.size() == weights.size(), ErrorCode::kShapeMismatch, "linear_combination: count mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(tape.size(scalars[i]) == 1, ErrorCode::kShapeMismatch, "linear_combination: non-scalar term");
    acc += static_cast<double>(weights[i]) * tape.value(scalars[i])[0];
  }
  return tape.record({static_cast<Real>(acc)}, scalars, [scalars, weights](Tape& t, Var self) {
    const Real g = t.grad(self)[0];
    for (std::size_t i = 0; i < scalars.size(); ++i)
      if (t.requires_grad(scalars[i])) t.grad(scalars[i])[0] += weights[i] * g;
  });
}

Var columns(Tape& tape, Var a, int stride, int begin, int count) {
  auto va = tape.value(a);
  require(stride > 0 && va.size() % static_cast<std::size_t>(stride) == 0 && begin >= 0 && begin + count <= stride,
          ErrorCode::kShapeMismatch, "columns: bad layout");
  const std::size_t rows = va.size() / static_cast<std::size_t>(stride);
  std::vector<Real> out(rows * static_cast<std::size_t>(count));
  for (std::size_t r = 0; r < rows; ++r)
    for (int c = 0; c < count; ++c) out[r * count + c] = va[r * stride + begin + c];
  return tape.record(std::move(out), {a}, [a, stride, begin, count, rows](Tape& t, Var self) {
    auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (int c = 0; c < count; ++c) ga[r * stride + begin + c] += g[r * count + c];
  });
}

Var tanh_scale(Tape& tape, Var a, Real s) {
  auto va = tape.value(a);
  std::vector<Real> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * std::tanh(va[i]);
  return tape.record(std::move(out), {a}, [a, s](Tape& t, Var self) {
    auto g = t.grad(self);
    auto y = t.value(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real th = s != 0 ? y[i] / s : Real(0);
      ga[i] += g[i] * s * (1 - th * th);
    }
  });
}

Var mul_rows(Tape& tape, Var a, Var row_weights, int channels) {
  auto va = tape.value(a);
  auto vw = tape.value(row_weights);
  require(va.size() == vw.size() * static_cast<std::size_t>(channels), ErrorCode::kShapeMismatch,
          "mul_rows: size mismatch");
  std::vector<Real> out(va.size());
  for (std::size_t r = 0; r < vw.size(); ++r)
    for (int c = 0; c < channels; ++c) out[r * channels + c] = va[r * channels + c] * vw[r];
  return tape.record(std::move(out), {a, row_weights}, [a, row_weights, channels](Tape& t, Var self) {
    auto g = t.grad(self);
    auto va = t.value(a);
    auto vw = t.value(row_weights);
    const bool ga_on = t.requires_grad(a), gw_on = t.requires_grad(row_weights);
    std::span<Real> ga, gw;
    if (ga_on) ga = t.grad(a);
    if (gw_on) gw = t.grad(row_weights);
    for (std::size_t r = 0; r < vw.size(); ++r)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = r * channels + c;
        if (ga_on) ga[i] += g[i] * vw[r];
        if (gw_on) gw[r] += g[i] * va[i];
      }
  });
}

Var substitute(Tape& tape, Var a, std::vector<Real> values) {
  require(values.size() == tape.size(a), ErrorCode::kShapeMismatch, "substitute: size mismatch");
  return tape.record(std::move(values), {a}, [a](Tape& t, Var self) {
    auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var gather_rows(Tape& tape, Var a, std::shared_ptr<const std::vector<std::uint32_t>> rows, int channels) {
  auto va = tape.value(a);
  const std::size_t C = static_cast<std::size_t>(channels);
  std::vector<Real> out(rows->size() * C);
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const std::size_t r = (*rows)[i];
    require((r + 1) * C <= va.size(), ErrorCode::kShapeMismatch, "gather_rows: row out of range");
    for (std::size_t c = 0; c < C; ++c) out[i * C + c] = va[r * C + c];
  }
  return tape.record(std::move(out), {a}, [a, rows, C](Tape& t, Var self) {
    auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < rows->size(); ++i)
      for (std::size_t c = 0; c < C; ++c) ga[(*rows)[i] * C + c] += g[i * C + c];
  });
}

Var scatter_rows(Tape& tape, std::vector<Real> base, std::shared_ptr<const std::vector<std::uint32_t>> rows,
                 Var values, int channels) {
  auto vv = tape.value(values);
  const std::size_t C = static_cast<std::size_t>(channels);
  require(vv.size() == rows->size() * C, ErrorCode::kShapeMismatch, "scatter_rows: values do not match rows");
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const std::size_t r = (*rows)[i];
    require((r + 1) * C <= base.size(), ErrorCode::kShapeMismatch, "scatter_rows: row out of range");
    for (std::size_t c = 0; c < C; ++c) base[r * C + c] = vv[i * C + c];
  }
  return tape.record(std::move(base), {values}, [values, rows, C](Tape& t, Var self) {
    auto g = t.grad(self);
    auto gv = t.grad(values);
    for (std::size_t i = 0; i < rows->size(); ++i)
      for (std::size_t c = 0; c < C; ++c) gv[i * C + c] += g[(*rows)[i] * C + c];
  });
}

G3D_NAMESPACE_END
