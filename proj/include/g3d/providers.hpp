#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "g3d/feature_map.hpp"
#include "g3d/image_io.hpp"

G3D_NAMESPACE_BEGIN

struct DenoiseRequest {
  std::string prompt;
  Real t = 0;      // noise level in [0, 1]
  Real omega = 0;  // guidance scale
  std::uint64_t seed = 0;
};

/// Produces the "denoised" image from a rendering. Treated as
/// gradient-transparent by the training loop.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Image denoise(const Image& rendered, const DenoiseRequest& request) = 0;
  virtual bool is_identity() const { return false; }
};

/// Pixel-aligned feature map for the known view `view` (0-based) with image G.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual FeatureMap features(const Image& image, int view) = 0;
};

/// Boundary map (gray, same size as the input) used as the target for a view.
class BoundaryProvider {
 public:
  virtual ~BoundaryProvider() = default;
  virtual Image boundary(const Image& image, int view) = 0;
};

class IdentityDenoiser final : public Denoiser {
 public:
  Image denoise(const Image& rendered, const DenoiseRequest&) override { return rendered; }
  bool is_identity() const override { return true; }
};

inline constexpr int kBuiltinFeatureSize = 128;
inline constexpr int kBuiltinFeatureChannels = 256;
inline constexpr int kBuiltinInputSize = 512;

/// Procedural features: a 4-level Gaussian pyramid of RGB plus Sobel
/// gradients of luminance, resampled to 128x128 and lifted to 256 channels by
/// a fixed seeded projection with orthonormal columns. Input must be 512x512.
FeatureMap builtin_features(const Image& image);

class BuiltinFeatureProvider final : public FeatureProvider {
 public:
  FeatureMap features(const Image& image, int) override { return builtin_features(image); }
};

class EdgeProxyBoundary final : public BoundaryProvider {
 public:
  Image boundary(const Image& image, int view) override;
};

/// Reads <dir>/view_<k>.pafm (k 1-based) instead of computing features.
class FileFeatureProvider final : public FeatureProvider {
 public:
  explicit FileFeatureProvider(std::string dir) : dir_(std::move(dir)) {}
  FeatureMap features(const Image& image, int view) override;

 private:
  std::string dir_;
};

/// Reads <dir>/view_<k>_hed.png (k 1-based).
class FileBoundary final : public BoundaryProvider {
 public:
  explicit FileBoundary(std::string dir) : dir_(std::move(dir)) {}
  Image boundary(const Image& image, int view) override;

 private:
  std::string dir_;
};

struct HttpOptions {
  double timeout_seconds = 60;
  int retries = 2;  // extra attempts after a connection failure or 5xx
};

/// Minimal client for the model sidecar at "http://host[:port]".
class SidecarClient {
 public:
  SidecarClient(const std::string& url, HttpOptions options = {});
  ~SidecarClient();
  SidecarClient(const SidecarClient&) = delete;
  SidecarClient& operator=(const SidecarClient&) = delete;

  bool healthy();
  Image denoise(const Image& image, const DenoiseRequest& request);
  FeatureMap features(const Image& image);
  Image hed(const Image& image);

  const std::string& host() const { return host_; }
  int port() const { return port_; }

 private:
  struct Field {
    std::string name, content, filename, content_type;
  };
  std::string post(const std::string& path, const std::vector<Field>& fields,
                   const std::vector<std::pair<std::string, std::string>>& headers);

  std::string host_;
  int port_ = 80;
  HttpOptions options_;
};

class HttpDenoiser final : public Denoiser {
 public:
  explicit HttpDenoiser(std::shared_ptr<SidecarClient> client) : client_(std::move(client)) {}
  Image denoise(const Image& rendered, const DenoiseRequest& request) override {
    return client_->denoise(rendered, request);
  }

 private:
  std::shared_ptr<SidecarClient> client_;
};

class HttpFeatureProvider final : public FeatureProvider {
 public:
  explicit HttpFeatureProvider(std::shared_ptr<SidecarClient> client) : client_(std::move(client)) {}
  FeatureMap features(const Image& image, int) override { return client_->features(image); }

 private:
  std::shared_ptr<SidecarClient> client_;
};

class HttpBoundary final : public BoundaryProvider {
 public:
  explicit HttpBoundary(std::shared_ptr<SidecarClient> client) : client_(std::move(client)) {}
  Image boundary(const Image& image, int) override { return client_->hed(image); }

 private:
  std::shared_ptr<SidecarClient> client_;
};

/// Constructors from configuration strings:
///   denoiser: "identity" | "http://..."
///   features: "builtin"  | "http://..." | "file:<dir>"
///   boundary: "proxy"    | "http://..." | "file:<dir>"
std::unique_ptr<Denoiser> make_denoiser(const std::string& spec, const HttpOptions& http = {});
std::unique_ptr<FeatureProvider> make_feature_provider(const std::string& spec, const HttpOptions& http = {});
std::unique_ptr<BoundaryProvider> make_boundary_provider(const std::string& spec, const HttpOptions& http = {});

G3D_NAMESPACE_END
