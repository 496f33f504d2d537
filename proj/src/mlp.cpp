#include "g3d/mlp.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <random>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<Real, 1, Eigen::Dynamic>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const RowVec>;
using MapVec = Eigen::Map<RowVec>;

struct LayerViews {
  std::vector<ConstMapMat> w;
  std::vector<ConstMapVec> b;
};

LayerViews views(const Tape& t, const std::vector<Var>& w, const std::vector<Var>& b, const std::vector<int>& widths) {
  LayerViews v;
  for (std::size_t l = 0; l < w.size(); ++l) {
    v.w.emplace_back(t.value(w[l]).data(), widths[l], widths[l + 1]);
    v.b.emplace_back(t.value(b[l]).data(), widths[l + 1]);
  }
  return v;
}

}  // namespace

Mlp::Mlp(ParamStore& store, const std::string& name, std::vector<int> widths, Real lr, std::uint64_t seed,
         bool zero_output_layer)
    : widths_(std::move(widths)) {
  require(widths_.size() >= 2, ErrorCode::kInvalidArgument, "an MLP needs at least one layer");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const bool zero = zero_output_layer && l + 2 == widths_.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<Real> w(static_cast<std::size_t>(in) * out), b(static_cast<std::size_t>(out));
    for (Real& x : w) x = zero ? Real(0) : static_cast<Real>(dist(rng));
    for (Real& x : b) x = zero ? Real(0) : static_cast<Real>(dist(rng));
    weights_.push_back(&store.add(name + ".l" + std::to_string(l) + ".w", std::move(w), lr));
    biases_.push_back(&store.add(name + ".l" + std::to_string(l) + ".b", std::move(b), lr));
  }
}

std::vector<Real> Mlp::eval(std::span<const Real> x) const {
  require(x.size() == static_cast<std::size_t>(input_dim()), ErrorCode::kShapeMismatch, "mlp_eval: input width");
  std::vector<Real> h(x.begin(), x.end());
  for (int l = 0; l < layer_count(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    std::vector<Real> z(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      Real acc = biases_[l]->value[o];
      for (int i = 0; i < in; ++i) acc += h[i] * weights_[l]->value[static_cast<std::size_t>(i) * out + o];
      z[o] = activation(l) == Activation::kRelu ? std::max(acc, Real(0)) : acc;
    }
    h = std::move(z);
  }
  return h;
}

Var Mlp::forward(Tape& tape, Var x) const {
  const int L = layer_count();
  const std::size_t in_size = tape.size(x);
  require(in_size % static_cast<std::size_t>(input_dim()) == 0, ErrorCode::kShapeMismatch, "mlp: input width");
  const Eigen::Index n = static_cast<Eigen::Index>(in_size / static_cast<std::size_t>(input_dim()));

  std::vector<Var> w(L), b(L);
  std::vector<Var> inputs{x};
  for (int l = 0; l < L; ++l) {
    w[l] = tape.parameter(*weights_[l]);
    b[l] = tape.parameter(*biases_[l]);
    inputs.push_back(w[l]);
    inputs.push_back(b[l]);
  }
  const LayerViews pv = views(tape, w, b, widths_);

  // Pre-activations of every layer are kept for the backward pass.
  auto pre = std::make_shared<std::vector<RowMat>>();
  pre->reserve(static_cast<std::size_t>(L));
  RowMat h = ConstMapMat(tape.value(x).data(), n, input_dim());
  for (int l = 0; l < L; ++l) {
    RowMat z = h * pv.w[l];
    z.rowwise() += pv.b[l];
    if (activation(l) == Activation::kRelu) {
      h = z.cwiseMax(Real(0));
      pre->push_back(std::move(z));
    } else {
      h = z;
      pre->push_back(RowMat());  // output layer: value stored in the node itself
    }
  }
  std::vector<Real> out(h.data(), h.data() + h.size());
  const std::vector<int> widths = widths_;
  return tape.record(std::move(out), inputs, [x, w, b, widths, pre, n, L](Tape& t, Var self) {
    const LayerViews pv = views(t, w, b, widths);
    auto gout = t.grad(self);
    const int out_w = widths.back();
    // Rows with a zero upstream gradient contribute nothing; backpropagate
    // through the remaining rows only.
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
      const Real* g = gout.data() + r * out_w;
      for (int c = 0; c < out_w; ++c)
        if (g[c] != 0) {
          rows.push_back(r);
          break;
        }
    }
    if (rows.empty()) return;
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    const bool all_rows = m == n;

    auto gather = [&](const Real* src, int width) {
      RowMat out(m, width);
      for (Eigen::Index i = 0; i < m; ++i)
        std::copy(src + rows[i] * width, src + (rows[i] + 1) * width, out.data() + i * width);
      return out;
    };
    auto gather_mat = [&](const RowMat& src) {
      if (all_rows) return src;
      return gather(src.data(), static_cast<int>(src.cols()));
    };

    RowMat dz = gather(gout.data(), out_w);
    for (int l = L - 1; l >= 0; --l) {
      RowMat a;  // layer input
      if (l == 0) a = gather(t.value(x).data(), widths[0]);
      else a = gather_mat((*pre)[l - 1]).cwiseMax(Real(0));
      MapMat(t.grad(w[l]).data(), widths[l], widths[l + 1]).noalias() += a.transpose() * dz;
      MapVec(t.grad(b[l]).data(), widths[l + 1]).noalias() += dz.colwise().sum();
      if (l == 0 && !t.requires_grad(x)) break;
      RowMat da = dz * pv.w[l].transpose();
      if (l == 0) {
        auto gx = t.grad(x);
        for (Eigen::Index i = 0; i < m; ++i)
          for (int c = 0; c < widths[0]; ++c) gx[rows[i] * widths[0] + c] += da(i, c);
        break;
      }
      const RowMat zprev = gather_mat((*pre)[l - 1]);
      dz = da.cwiseProduct((zprev.array() > Real(0)).template cast<Real>().matrix());
    }
  });
}

Var Mlp::forward_jvp(Tape& tape, Var x4) const {
  const int L = layer_count();
  const std::size_t in_size = tape.size(x4);
  require(in_size % (4 * static_cast<std::size_t>(input_dim())) == 0, ErrorCode::kShapeMismatch,
          "mlp_jvp: input width");
  const Eigen::Index n = static_cast<Eigen::Index>(in_size / (4 * static_cast<std::size_t>(input_dim())));

  std::vector<Var> w(L), b(L);
  std::vector<Var> inputs{x4};
  for (int l = 0; l < L; ++l) {
    w[l] = tape.parameter(*weights_[l]);
    b[l] = tape.parameter(*biases_[l]);
    inputs.push_back(w[l]);
    inputs.push_back(b[l]);
  }
  const LayerViews pv = views(tape, w, b, widths_);

  // Per layer: pre-activation z and the three pre-activation tangents.
  struct Saved {
    RowMat z;
    std::array<RowMat, 3> dz;
  };
  auto saved = std::make_shared<std::vector<Saved>>();
  const Real* px = tape.value(x4).data();
  const Eigen::Index d0 = input_dim();
  RowMat h = ConstMapMat(px, n, d0);
  std::array<RowMat, 3> th;
  for (int k = 0; k < 3; ++k) th[k] = ConstMapMat(px + (k + 1) * n * d0, n, d0);
  for (int l = 0; l < L; ++l) {
    Saved s;
    s.z = h * pv.w[l];
    s.z.rowwise() += pv.b[l];
    for (int k = 0; k < 3; ++k) s.dz[k] = th[k] * pv.w[l];
    if (activation(l) == Activation::kRelu) {
      const RowMat mask = (s.z.array() > Real(0)).template cast<Real>().matrix();
      h = s.z.cwiseMax(Real(0));
      for (int k = 0; k < 3; ++k) th[k] = s.dz[k].cwiseProduct(mask);
    } else {
      h = s.z;
      for (int k = 0; k < 3; ++k) th[k] = s.dz[k];
    }
    saved->push_back(std::move(s));
  }
  const Eigen::Index dout = output_dim();
  std::vector<Real> out(static_cast<std::size_t>(4 * n * dout));
  std::copy(h.data(), h.data() + h.size(), out.begin());
  for (int k = 0; k < 3; ++k) std::copy(th[k].data(), th[k].data() + th[k].size(), out.begin() + (k + 1) * n * dout);

  const std::vector<int> widths = widths_;
  return tape.record(std::move(out), inputs, [x4, w, b, widths, saved, n, L](Tape& t, Var self) {
    const LayerViews pv = views(t, w, b, widths);
    auto gout = t.grad(self);
    const Eigen::Index dout = widths.back();
    RowMat gz = ConstMapMat(gout.data(), n, dout);
    std::array<RowMat, 3> gdz;
    for (int k = 0; k < 3; ++k) gdz[k] = ConstMapMat(gout.data() + (k + 1) * n * dout, n, dout);
    const Real* px = t.value(x4).data();
    for (int l = L - 1; l >= 0; --l) {
      // Layer input value and tangents.
      RowMat a;
      std::array<RowMat, 3> ta;
      if (l == 0) {
        a = ConstMapMat(px, n, widths[0]);
        for (int k = 0; k < 3; ++k) ta[k] = ConstMapMat(px + (k + 1) * n * widths[0], n, widths[0]);
      } else {
        const Saved& s = (*saved)[l - 1];
        const RowMat mask = (s.z.array() > Real(0)).template cast<Real>().matrix();
        a = s.z.cwiseMax(Real(0));
        for (int k = 0; k < 3; ++k) ta[k] = s.dz[k].cwiseProduct(mask);
      }
      auto gw = MapMat(t.grad(w[l]).data(), widths[l], widths[l + 1]);
      gw.noalias() += a.transpose() * gz;
      for (int k = 0; k < 3; ++k) gw.noalias() += ta[k].transpose() * gdz[k];
      MapVec(t.grad(b[l]).data(), widths[l + 1]).noalias() += gz.colwise().sum();
      if (l == 0) {
        if (t.requires_grad(x4)) {
          auto gx = t.grad(x4);
          const Eigen::Index d0 = widths[0];
          MapMat(gx.data(), n, d0).noalias() += gz * pv.w[0].transpose();
          for (int k = 0; k < 3; ++k)
            MapMat(gx.data() + (k + 1) * n * d0, n, d0).noalias() += gdz[k] * pv.w[0].transpose();
        }
        break;
      }
      const Saved& s = (*saved)[l - 1];
      const RowMat mask = (s.z.array() > Real(0)).template cast<Real>().matrix();
      // ReLU is piecewise linear: its mask is locally constant, so both the
      // value and tangent paths are gated by the same mask.
      gz = (gz * pv.w[l].transpose()).cwiseProduct(mask);
      for (int k = 0; k < 3; ++k) gdz[k] = (gdz[k] * pv.w[l].transpose()).cwiseProduct(mask);
    }
  });
}

G3D_NAMESPACE_END
