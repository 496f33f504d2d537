#include "g3d/fusion.hpp"

#include <cmath>
#include <memory>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

double dotp(const Real* a, const Real* b, int C) {
  double s = 0;
  for (int c = 0; c < C; ++c) s += static_cast<double>(a[c]) * b[c];
  return s;
}

bool is_valid(std::span<const std::uint8_t> valid, int k) { return valid.empty() || valid[k] != 0; }

}  // namespace

std::vector<Real> similarity_weights(std::span<const Real> samples, int K, int C, int r, Real alpha,
                                     std::span<const std::uint8_t> valid, int* clamped) {
  require(samples.size() == static_cast<std::size_t>(K) * C, ErrorCode::kShapeMismatch, "similarity: sample size");
  require(r >= 0 && r < K, ErrorCode::kInvalidArgument, "similarity: reference out of range");
  require(alpha > 0, ErrorCode::kInvalidArgument, "similarity: alpha must be positive");
  const Real* fr = samples.data() + static_cast<std::size_t>(r) * C;
  const double nr = std::sqrt(dotp(fr, fr, C));
  std::vector<Real> w(static_cast<std::size_t>(K), 0);
  for (int k = 0; k < K; ++k) {
    if (!is_valid(valid, k)) continue;
    const Real* fk = samples.data() + static_cast<std::size_t>(k) * C;
    const double wk = dotp(fk, fr, C) / std::max(std::sqrt(dotp(fk, fk, C)) * nr, static_cast<double>(alpha));
    if (wk < 0 && clamped) ++*clamped;
    w[k] = static_cast<Real>(std::max(wk, 0.0));
  }
  return w;
}

bool weighted_average(std::span<const Real> samples, std::span<const Real> weights, int C, std::span<Real> out) {
  double total = 0;
  for (Real w : weights) total += w;
  if (!(total > 0)) return false;
  for (int c = 0; c < C; ++c) {
    double acc = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) acc += static_cast<double>(weights[k]) * samples[k * C + c];
    out[c] = static_cast<Real>(acc / total);
  }
  return true;
}

bool fuse_point(std::span<const Real> samples, int K, int C, int r, Real alpha, std::span<const std::uint8_t> valid,
                std::span<Real> out, int* clamped) {
  const auto w = similarity_weights(samples, K, C, r, alpha, valid, clamped);
  if (weighted_average(samples, w, C, out)) return false;
  std::copy_n(samples.data() + static_cast<std::size_t>(r) * C, C, out.data());
  return true;
}

void fuse_point_backward(std::span<const Real> samples, int K, int C, int r, Real alpha,
                         std::span<const std::uint8_t> valid, std::span<const Real> grad_out,
                         std::span<Real> grad_samples) {
  const Real* fr = samples.data() + static_cast<std::size_t>(r) * C;
  const double nr = std::sqrt(dotp(fr, fr, C));
  std::vector<double> raw(static_cast<std::size_t>(K), 0), w(static_cast<std::size_t>(K), 0);
  double total = 0;
  for (int k = 0; k < K; ++k) {
    if (!is_valid(valid, k)) continue;
    const Real* fk = samples.data() + static_cast<std::size_t>(k) * C;
    raw[k] = dotp(fk, fr, C) / std::max(std::sqrt(dotp(fk, fk, C)) * nr, static_cast<double>(alpha));
    w[k] = std::max(raw[k], 0.0);
    total += w[k];
  }
  if (!(total > 0)) {
    for (int c = 0; c < C; ++c) grad_samples[static_cast<std::size_t>(r) * C + c] += grad_out[c];
    return;
  }
  std::vector<double> fused(static_cast<std::size_t>(C), 0);
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < C; ++c) fused[c] += w[k] * samples[static_cast<std::size_t>(k) * C + c];
  for (double& f : fused) f /= total;

  for (int k = 0; k < K; ++k) {
    if (!is_valid(valid, k)) continue;
    const Real* fk = samples.data() + static_cast<std::size_t>(k) * C;
    Real* gk = grad_samples.data() + static_cast<std::size_t>(k) * C;
    // Direct path through the average.
    double gw = 0;
    for (int c = 0; c < C; ++c) {
      gk[c] += static_cast<Real>(w[k] / total * grad_out[c]);
      gw += grad_out[c] * (fk[c] - fused[c]);
    }
    gw /= total;
    if (!(raw[k] > 0)) continue;
    // Path through the cosine weight.
    Real* gr = grad_samples.data() + static_cast<std::size_t>(r) * C;
    const double nk = std::sqrt(dotp(fk, fk, C));
    const double d = dotp(fk, fr, C);
    if (nk * nr > alpha) {
      const double D = nk * nr;
      for (int c = 0; c < C; ++c) {
        const double dk = fr[c] / D - d / (D * D) * nr * fk[c] / nk;
        const double dr = fk[c] / D - d / (D * D) * nk * fr[c] / nr;
        gk[c] += static_cast<Real>(gw * dk);
        gr[c] += static_cast<Real>(gw * dr);
      }
    } else {
      for (int c = 0; c < C; ++c) {
        gk[c] += static_cast<Real>(gw * fr[c] / alpha);
        gr[c] += static_cast<Real>(gw * fk[c] / alpha);
      }
    }
  }
}

std::vector<std::array<Real, 2>> project_to_maps(const std::vector<CameraView>& cams,
                                                 const std::vector<FeatureMap>& maps, std::span<const Vec3> points,
                                                 std::vector<std::uint8_t>& valid) {
  require(cams.size() == maps.size(), ErrorCode::kShapeMismatch, "fusion: one feature map per camera");
  const std::size_t K = cams.size();
  std::vector<std::array<Real, 2>> coords(points.size() * K);
  valid.assign(points.size() * K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    const Real sx = static_cast<Real>(maps[k].width) / cams[k].width;
    const Real sy = static_cast<Real>(maps[k].height) / cams[k].height;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Projection p = project_point(cams[k], points[i]);
      const Real u = p.u * sx, v = p.v * sy;
      coords[i * K + k] = {u, v};
      valid[i * K + k] = !p.behind && u >= 0 && v >= 0 && u <= maps[k].width && v <= maps[k].height;
    }
  }
  return coords;
}

ViewSamples sample_views(const std::vector<FeatureMap>& maps, std::span<const std::array<Real, 2>> coords,
                         std::span<const std::uint8_t> valid, std::size_t n) {
  ViewSamples s;
  s.K = static_cast<int>(maps.size());
  require(s.K > 0, ErrorCode::kInvalidArgument, "fusion: no feature maps");
  s.C = maps[0].channels;
  for (const auto& m : maps) require(m.channels == s.C, ErrorCode::kShapeMismatch, "fusion: channel mismatch");
  s.values.assign(n * s.K * s.C, 0);
  s.valid.assign(valid.begin(), valid.end());
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < s.K; ++k) {
      const auto [u, v] = coords[i * s.K + k];
      bilinear_sample(maps[k], u, v, std::span<Real>(s.values.data() + (i * s.K + k) * s.C, s.C));
    }
  return s;
}

std::vector<Real> fuse_all(const ViewSamples& samples, int r, Real alpha, FusionStats* stats) {
  const std::size_t n = samples.count();
  const std::size_t KC = static_cast<std::size_t>(samples.K) * samples.C;
  std::vector<Real> out(n * samples.C);
  for (std::size_t i = 0; i < n; ++i) {
    int clamped = 0;
    const bool degenerate =
        fuse_point(std::span<const Real>(samples.values.data() + i * KC, KC), samples.K, samples.C, r, alpha,
                   std::span<const std::uint8_t>(samples.valid.data() + i * samples.K, samples.K),
                   std::span<Real>(out.data() + i * samples.C, samples.C), &clamped);
    if (stats) {
      stats->degenerate_points += degenerate;
      stats->clamped_weights += static_cast<std::size_t>(clamped);
    }
  }
  return out;
}

Var fuse_features(Tape& tape, Var samples, int K, int C, int r, std::vector<std::uint8_t> valid, Real alpha) {
  const std::size_t KC = static_cast<std::size_t>(K) * C;
  require(tape.size(samples) % KC == 0, ErrorCode::kShapeMismatch, "fuse_features: sample size");
  const std::size_t n = tape.size(samples) / KC;
  require(valid.empty() || valid.size() == n * K, ErrorCode::kShapeMismatch, "fuse_features: validity size");
  ViewSamples vs;
  vs.K = K;
  vs.C = C;
  auto values = tape.value(samples);
  vs.values.assign(values.begin(), values.end());
  vs.valid = valid.empty() ? std::vector<std::uint8_t>(n * K, 1) : std::move(valid);
  std::vector<Real> out = fuse_all(vs, r, alpha);
  auto mask = std::make_shared<std::vector<std::uint8_t>>(std::move(vs.valid));
  return tape.record(std::move(out), {samples}, [samples, K, C, r, alpha, mask, n, KC](Tape& t, Var self) {
    auto g = t.grad(self);
    auto v = t.value(samples);
    auto gs = t.grad(samples);
    for (std::size_t i = 0; i < n; ++i)
      fuse_point_backward(v.subspan(i * KC, KC), K, C, r, alpha,
                          std::span<const std::uint8_t>(mask->data() + i * K, K), g.subspan(i * C, C),
                          gs.subspan(i * KC, KC));
  });
}

G3D_NAMESPACE_END
