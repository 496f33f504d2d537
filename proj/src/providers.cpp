#include "g3d/providers.hpp"

// Eigen must precede httplib: <resolv.h> defines a _res macro.
#include <Eigen/Dense>
#include <httplib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <random>

#include "g3d/edge_proxy.hpp"
#include "g3d/error.hpp"
#include "g3d/pafm.hpp"

G3D_NAMESPACE_BEGIN

namespace {

constexpr int kPyramidLevels = 4;
constexpr int kLevelChannels = 5;  // r, g, b, d/dx, d/dy
constexpr std::uint64_t kProjectionSeed = 0x6733645f66656174ULL;

// Plane of one channel, row-major.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  double at(int x, int y) const {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return v[static_cast<std::size_t>(y) * w + x];
  }
};

Plane blur5(const Plane& p) {
  std::array<double, 5> g{};
  double sum = 0;
  for (int i = 0; i < 5; ++i) sum += g[i] = std::exp(-0.5 * (i - 2) * (i - 2));
  for (auto& x : g) x /= sum;
  Plane tmp{p.w, p.h, std::vector<double>(p.v.size())}, out = tmp;
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      double s = 0;
      for (int i = 0; i < 5; ++i) s += g[i] * p.at(x + i - 2, y);
      tmp.v[static_cast<std::size_t>(y) * p.w + x] = s;
    }
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      double s = 0;
      for (int i = 0; i < 5; ++i) s += g[i] * tmp.at(x, y + i - 2);
      out.v[static_cast<std::size_t>(y) * p.w + x] = s;
    }
  return out;
}

Plane half(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.v[static_cast<std::size_t>(y) * out.w + x] =
          0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1));
  return out;
}

// Bilinear resample with texel-centre alignment.
double resample(const Plane& p, int x, int y, int size) {
  const double u = (x + 0.5) * p.w / size - 0.5, v = (y + 0.5) * p.h / size - 0.5;
  const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0, fy = v - y0;
  return (1 - fy) * ((1 - fx) * p.at(x0, y0) + fx * p.at(x0 + 1, y0)) +
         fy * ((1 - fx) * p.at(x0, y0 + 1) + fx * p.at(x0 + 1, y0 + 1));
}

const Eigen::MatrixXd& projection() {
  static const Eigen::MatrixXd q = [] {
    std::mt19937_64 rng(kProjectionSeed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd g(kBuiltinFeatureChannels, kPyramidLevels * kLevelChannels);
    for (int c = 0; c < g.cols(); ++c)
      for (int r = 0; r < g.rows(); ++r) g(r, c) = n(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  }();
  return q;
}

std::string format_real(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string to_string(const std::vector<std::uint8_t>& bytes) { return std::string(bytes.begin(), bytes.end()); }

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Image view_gray(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.width, image.height, 1);
  out.data = edge_proxy(image.data, image.width, image.height, image.channels);
  return out;
}

std::filesystem::path numbered(const std::string& dir, int view, const char* suffix) {
  return std::filesystem::path(dir) / ("view_" + std::to_string(view + 1) + suffix);
}

}  // namespace

FeatureMap builtin_features(const Image& image) {
  require(image.width == kBuiltinInputSize && image.height == kBuiltinInputSize && image.channels == 3,
          ErrorCode::kInvalidArgument,
          "builtin features: expected a 512x512 RGB image, got " + std::to_string(image.width) + "x" +
              std::to_string(image.height) + "x" + std::to_string(image.channels));
  std::array<Plane, 3> rgb;
  for (int c = 0; c < 3; ++c) {
    rgb[c] = {image.width, image.height, std::vector<double>(image.pixel_count())};
    for (std::size_t i = 0; i < image.pixel_count(); ++i) rgb[c].v[i] = image.data[i * 3 + c];
  }
  const int S = kBuiltinFeatureSize;
  const int L = kPyramidLevels * kLevelChannels;
  std::vector<double> stacked(static_cast<std::size_t>(S) * S * L);
  for (int level = 0; level < kPyramidLevels; ++level) {
    if (level > 0)
      for (auto& p : rgb) p = half(blur5(p));
    Plane lum{rgb[0].w, rgb[0].h, std::vector<double>(rgb[0].v.size())};
    for (std::size_t i = 0; i < lum.v.size(); ++i)
      lum.v[i] = 0.299 * rgb[0].v[i] + 0.587 * rgb[1].v[i] + 0.114 * rgb[2].v[i];
    Plane gx = lum, gy = lum;
    for (int y = 0; y < lum.h; ++y)
      for (int x = 0; x < lum.w; ++x) {
        const auto l = [&](int dx, int dy) { return lum.at(x + dx, y + dy); };
        const std::size_t i = static_cast<std::size_t>(y) * lum.w + x;
        gx.v[i] = (l(1, -1) + 2 * l(1, 0) + l(1, 1) - l(-1, -1) - 2 * l(-1, 0) - l(-1, 1)) / 8;
        gy.v[i] = (l(-1, 1) + 2 * l(0, 1) + l(1, 1) - l(-1, -1) - 2 * l(0, -1) - l(1, -1)) / 8;
      }
    const std::array<const Plane*, kLevelChannels> planes{&rgb[0], &rgb[1], &rgb[2], &gx, &gy};
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x)
        for (int c = 0; c < kLevelChannels; ++c)
          stacked[(static_cast<std::size_t>(y) * S + x) * L + level * kLevelChannels + c] =
              resample(*planes[c], x, y, S);
  }
  const Eigen::MatrixXd& q = projection();
  FeatureMap out(S, S, kBuiltinFeatureChannels);
  for (std::size_t p = 0; p < static_cast<std::size_t>(S) * S; ++p) {
    const Eigen::Map<const Eigen::VectorXd> x(stacked.data() + p * L, L);
    const Eigen::VectorXd f = q * x;
    for (int c = 0; c < kBuiltinFeatureChannels; ++c) out.data[p * kBuiltinFeatureChannels + c] = static_cast<Real>(f[c]);
  }
  return out;
}

Image EdgeProxyBoundary::boundary(const Image& image, int) { return view_gray(image); }

FeatureMap FileFeatureProvider::features(const Image&, int view) {
  const auto path = numbered(dir_, view, ".pafm");
  require(std::filesystem::exists(path), ErrorCode::kProvider, "feature file missing: " + path.string());
  return load_pafm(path);
}

Image FileBoundary::boundary(const Image& image, int view) {
  const auto path = numbered(dir_, view, "_hed.png");
  require(std::filesystem::exists(path), ErrorCode::kProvider, "boundary file missing: " + path.string());
  Image out = read_png(path, 1);
  require(out.width == image.width && out.height == image.height, ErrorCode::kSizeMismatch,
          "boundary map " + path.string() + " does not match the view size");
  return out;
}

SidecarClient::SidecarClient(const std::string& url, HttpOptions options) : options_(options) {
  const std::string scheme = "http://";
  require(url.rfind(scheme, 0) == 0, ErrorCode::kConfig, "sidecar URL must start with http://: " + url);
  std::string rest = url.substr(scheme.size());
  if (auto slash = rest.find('/'); slash != std::string::npos) {
    require(rest.find_first_not_of('/', slash) == std::string::npos, ErrorCode::kConfig,
            "sidecar URL must not have a path: " + url);
    rest = rest.substr(0, slash);
  }
  if (auto colon = rest.rfind(':'); colon != std::string::npos) {
    const std::string p = rest.substr(colon + 1);
    auto r = std::from_chars(p.data(), p.data() + p.size(), port_);
    require(r.ec == std::errc{} && r.ptr == p.data() + p.size() && port_ > 0 && port_ < 65536, ErrorCode::kConfig,
            "bad port in sidecar URL: " + url);
    rest = rest.substr(0, colon);
  }
  require(!rest.empty(), ErrorCode::kConfig, "missing host in sidecar URL: " + url);
  host_ = rest;
}

SidecarClient::~SidecarClient() = default;

bool SidecarClient::healthy() {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::duration<double>(options_.timeout_seconds));
  cli.set_read_timeout(std::chrono::duration<double>(options_.timeout_seconds));
  auto res = cli.Get("/healthz");
  return res && res->status == 200;
}

std::string SidecarClient::post(const std::string& path, const std::vector<Field>& fields,
                                const std::vector<std::pair<std::string, std::string>>& headers) {
  httplib::MultipartFormDataItems items;
  for (const auto& f : fields) items.push_back({f.name, f.content, f.filename, f.content_type});
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    httplib::Client cli(host_, port_);
    cli.set_connection_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    cli.set_read_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    cli.set_write_timeout(std::chrono::duration<double>(options_.timeout_seconds));
    auto res = cli.Post(path, hdrs, items);
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (res->status < 500) break;  // client errors are not retried
  }
  fail(ErrorCode::kProvider, "sidecar " + host_ + ":" + std::to_string(port_) + path + " failed: " + last_error);
}

Image SidecarClient::denoise(const Image& image, const DenoiseRequest& request) {
  const std::string body = post("/denoise",
                                {{"image", to_string(encode_png(image)), "image.png", "image/png"},
                                 {"prompt", request.prompt, "", ""},
                                 {"t", format_real(request.t), "", ""},
                                 {"omega", format_real(request.omega), "", ""}},
                                {{"X-Seed", std::to_string(request.seed)}});
  Image out = decode_png(as_bytes(body), 3);
  require(out.width == image.width && out.height == image.height, ErrorCode::kProvider,
          "sidecar /denoise returned an image of the wrong size");
  return out;
}

FeatureMap SidecarClient::features(const Image& image) {
  const std::string body = post("/features", {{"image", to_string(encode_png(image)), "image.png", "image/png"}}, {});
  return read_pafm(as_bytes(body));
}

Image SidecarClient::hed(const Image& image) {
  const std::string body = post("/hed", {{"image", to_string(encode_png(image)), "image.png", "image/png"}}, {});
  Image out = decode_png(as_bytes(body), 1);
  require(out.width == image.width && out.height == image.height, ErrorCode::kProvider,
          "sidecar /hed returned a map of the wrong size");
  return out;
}

std::unique_ptr<Denoiser> make_denoiser(const std::string& spec, const HttpOptions& http) {
  if (spec == "identity") return std::make_unique<IdentityDenoiser>();
  if (spec.rfind("http://", 0) == 0) return std::make_unique<HttpDenoiser>(std::make_shared<SidecarClient>(spec, http));
  fail(ErrorCode::kConfig, "denoiser: expected identity or http://..., got '" + spec + "'");
}

std::unique_ptr<FeatureProvider> make_feature_provider(const std::string& spec, const HttpOptions& http) {
  if (spec == "builtin") return std::make_unique<BuiltinFeatureProvider>();
  if (spec.rfind("file:", 0) == 0) return std::make_unique<FileFeatureProvider>(spec.substr(5));
  if (spec.rfind("http://", 0) == 0)
    return std::make_unique<HttpFeatureProvider>(std::make_shared<SidecarClient>(spec, http));
  fail(ErrorCode::kConfig, "features: expected builtin, file:<dir> or http://..., got '" + spec + "'");
}

std::unique_ptr<BoundaryProvider> make_boundary_provider(const std::string& spec, const HttpOptions& http) {
  if (spec == "proxy") return std::make_unique<EdgeProxyBoundary>();
  if (spec.rfind("file:", 0) == 0) return std::make_unique<FileBoundary>(spec.substr(5));
  if (spec.rfind("http://", 0) == 0) return std::make_unique<HttpBoundary>(std::make_shared<SidecarClient>(spec, http));
  fail(ErrorCode::kConfig, "boundary: expected proxy, file:<dir> or http://..., got '" + spec + "'");
}

G3D_NAMESPACE_END
