#include "g3d/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

constexpr int kRadius = 5;

std::array<double, 2 * kRadius + 1> window() {
  std::array<double, 2 * kRadius + 1> w{};
  double total = 0;
  for (int i = -kRadius; i <= kRadius; ++i) total += w[i + kRadius] = std::exp(-(i * i) / (2 * 1.5 * 1.5));
  for (double& x : w) x /= total;
  return w;
}

// Valid-region separable blur of one channel.
std::vector<double> blur(const std::vector<double>& in, int W, int H) {
  const auto w = window();
  const int ow = W - 2 * kRadius, oh = H - 2 * kRadius;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * H), out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k <= 2 * kRadius; ++k) acc += w[k] * in[static_cast<std::size_t>(y) * W + x + k];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int k = 0; k <= 2 * kRadius; ++k) acc += w[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

void check_pair(const Image& a, const Image& b) {
  require(a.width == b.width && a.height == b.height && a.channels == b.channels, ErrorCode::kShapeMismatch,
          "metric: image shapes differ");
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  check_pair(a, b);
  require(a.width > 2 * kRadius && a.height > 2 * kRadius, ErrorCode::kInvalidArgument, "ssim: image too small");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int W = a.width, H = a.height;
  const std::size_t n = a.pixel_count();
  double total = 0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data[i * a.channels + c];
      y[i] = b.data[i * b.channels + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = blur(x, W, H), my = blur(y, W, H), sxx = blur(xx, W, H), syy = blur(yy, W, H),
               sxy = blur(xy, W, H);
    double acc = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      acc += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / a.channels;
}

double psnr(const Image& a, const Image& b) {
  check_pair(a, b);
  double se = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) se += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  const double mse = se / static_cast<double>(a.data.size());
  return mse == 0 ? std::numeric_limits<double>::infinity() : 10 * std::log10(1 / mse);
}

G3D_NAMESPACE_END
