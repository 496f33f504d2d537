#include "g3d/bundle.hpp"

#include <string>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

std::filesystem::path view_file(const std::filesystem::path& dir, int k, const char* suffix) {
  return dir / ("view_" + std::to_string(k) + suffix + ".png");
}

}  // namespace

SupervisionBundle load_bundle(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::kMissingFile, "bundle directory not found: " + dir.string());
  SupervisionBundle b;
  int with_hed = 0;
  for (int k = 1; std::filesystem::exists(view_file(dir, k, "")); ++k) {
    const auto alpha_path = view_file(dir, k, "_alpha");
    require(std::filesystem::exists(alpha_path), ErrorCode::kMissingFile,
            "bundle: missing alpha map for view " + std::to_string(k) + " (" + alpha_path.string() + ")");
    b.images.push_back(read_png(view_file(dir, k, ""), 3));
    b.alphas.push_back(read_png(alpha_path, 1));
    const auto hed_path = view_file(dir, k, "_hed");
    if (std::filesystem::exists(hed_path)) {
      b.hed.push_back(read_png(hed_path, 1));
      ++with_hed;
    }
  }
  const int K = b.view_count();
  require(K > 0, ErrorCode::kMissingFile, "bundle: no view_1.png in " + dir.string());
  require(with_hed == 0 || with_hed == K, ErrorCode::kMissingFile,
          "bundle: boundary maps present for only " + std::to_string(with_hed) + " of " + std::to_string(K) + " views");
  for (int k = 0; k < K; ++k) {
    const bool ok = b.images[k].width == b.width() && b.images[k].height == b.height() &&
                    b.alphas[k].width == b.width() && b.alphas[k].height == b.height() &&
                    (!b.has_hed() || (b.hed[k].width == b.width() && b.hed[k].height == b.height()));
    require(ok, ErrorCode::kSizeMismatch, "bundle: inconsistent image sizes at view " + std::to_string(k + 1));
  }
  return b;
}

void save_bundle(const SupervisionBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (int k = 0; k < bundle.view_count(); ++k) {
    write_png(view_file(dir, k + 1, ""), bundle.images[k]);
    write_png(view_file(dir, k + 1, "_alpha"), bundle.alphas[k]);
    if (bundle.has_hed()) write_png(view_file(dir, k + 1, "_hed"), bundle.hed[k]);
  }
}

G3D_NAMESPACE_END
