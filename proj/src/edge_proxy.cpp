#include "g3d/edge_proxy.hpp"

#include <array>
#include <cmath>
#include <memory>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

std::array<Real, 5> gaussian_taps() {
  std::array<double, 5> w{};
  double total = 0;
  for (int k = -2; k <= 2; ++k) total += w[k + 2] = std::exp(-0.5 * k * k);
  std::array<Real, 5> out{};
  for (int k = 0; k < 5; ++k) out[k] = static_cast<Real>(w[k] / total);
  return out;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Separable correlation with clamped borders; `axis` 0 runs along x.
template <std::size_t N>
std::vector<Real> convolve(const std::vector<Real>& in, int W, int H, const std::array<Real, N>& k, int axis) {
  const int r = static_cast<int>(N) / 2;
  std::vector<Real> out(in.size(), 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      Real acc = 0;
      for (int j = 0; j < static_cast<int>(N); ++j) {
        const int xx = axis == 0 ? clampi(x + j - r, 0, W - 1) : x;
        const int yy = axis == 1 ? clampi(y + j - r, 0, H - 1) : y;
        acc += k[j] * in[static_cast<std::size_t>(yy) * W + xx];
      }
      out[static_cast<std::size_t>(y) * W + x] = acc;
    }
  return out;
}

template <std::size_t N>
std::vector<Real> convolve_transpose(const std::vector<Real>& g, int W, int H, const std::array<Real, N>& k, int axis) {
  const int r = static_cast<int>(N) / 2;
  std::vector<Real> out(g.size(), 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const Real gv = g[static_cast<std::size_t>(y) * W + x];
      if (gv == 0) continue;
      for (int j = 0; j < static_cast<int>(N); ++j) {
        const int xx = axis == 0 ? clampi(x + j - r, 0, W - 1) : x;
        const int yy = axis == 1 ? clampi(y + j - r, 0, H - 1) : y;
        out[static_cast<std::size_t>(yy) * W + xx] += k[j] * gv;
      }
    }
  return out;
}

constexpr std::array<Real, 3> kSmooth{1, 2, 1};
constexpr std::array<Real, 3> kDiff{-1, 0, 1};

struct Forward {
  std::vector<Real> gx, gy, out;
};

std::vector<Real> luminance(std::span<const Real> image, int W, int H, int C) {
  require(C == 1 || C == 3, ErrorCode::kShapeMismatch, "edge_proxy: expected 1 or 3 channels");
  require(image.size() == static_cast<std::size_t>(W) * H * C, ErrorCode::kShapeMismatch, "edge_proxy: image size");
  const std::size_t n = static_cast<std::size_t>(W) * H;
  std::vector<Real> gray(n);
  for (std::size_t i = 0; i < n; ++i)
    gray[i] = C == 1 ? image[i]
                     : Real(0.299) * image[3 * i] + Real(0.587) * image[3 * i + 1] + Real(0.114) * image[3 * i + 2];
  return gray;
}

Forward run(std::span<const Real> image, int W, int H, int C) {
  const auto g5 = gaussian_taps();
  const auto blurred = convolve(convolve(luminance(image, W, H, C), W, H, g5, 0), W, H, g5, 1);
  Forward f;
  f.gx = convolve(convolve(blurred, W, H, kDiff, 0), W, H, kSmooth, 1);
  f.gy = convolve(convolve(blurred, W, H, kSmooth, 0), W, H, kDiff, 1);
  const Real inv = 1 / edge_proxy_normalizer();
  f.out.resize(f.gx.size());
  for (std::size_t i = 0; i < f.out.size(); ++i)
    f.out[i] = std::min(std::sqrt(f.gx[i] * f.gx[i] + f.gy[i] * f.gy[i]) * inv, Real(1));
  return f;
}

}  // namespace

Real edge_proxy_normalizer() {
  const auto g = gaussian_taps();
  return 4 * (g[2] + g[3]);
}

std::vector<Real> edge_proxy(std::span<const Real> image, int width, int height, int channels) {
  return run(image, width, height, channels).out;
}

Var edge_proxy(Tape& tape, Var image, int width, int height, int channels) {
  auto f = std::make_shared<Forward>(run(tape.value(image), width, height, channels));
  std::vector<Real> out = f->out;
  return tape.record(std::move(out), {image}, [image, f, width, height, channels](Tape& t, Var self) {
    auto g = t.grad(self);
    const std::size_t n = g.size();
    const Real inv = 1 / edge_proxy_normalizer();
    std::vector<Real> ggx(n, 0), ggy(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Real mag = std::sqrt(f->gx[i] * f->gx[i] + f->gy[i] * f->gy[i]);
      if (g[i] == 0 || mag == 0 || mag * inv >= 1) continue;
      ggx[i] = g[i] * inv * f->gx[i] / mag;
      ggy[i] = g[i] * inv * f->gy[i] / mag;
    }
    const auto g5 = gaussian_taps();
    std::vector<Real> gb = convolve_transpose(convolve_transpose(ggx, width, height, kSmooth, 1), width, height, kDiff, 0);
    const std::vector<Real> gb2 =
        convolve_transpose(convolve_transpose(ggy, width, height, kDiff, 1), width, height, kSmooth, 0);
    for (std::size_t i = 0; i < n; ++i) gb[i] += gb2[i];
    const std::vector<Real> gl = convolve_transpose(convolve_transpose(gb, width, height, g5, 1), width, height, g5, 0);
    auto gi = t.grad(image);
    for (std::size_t i = 0; i < n; ++i) {
      if (channels == 1) {
        gi[i] += gl[i];
      } else {
        gi[3 * i] += Real(0.299) * gl[i];
        gi[3 * i + 1] += Real(0.587) * gl[i];
        gi[3 * i + 2] += Real(0.114) * gl[i];
      }
    }
  });
}

G3D_NAMESPACE_END
