#pragma once

#include <filesystem>
#include <vector>

#include "g3d/image_io.hpp"

G3D_NAMESPACE_BEGIN

/// Per known view k (1-based on disk): view_k.png, view_k_alpha.png and an
/// optional view_k_hed.png.
struct SupervisionBundle {
  std::vector<Image> images;  // RGB
  std::vector<Image> alphas;  // gray
  std::vector<Image> hed;     // gray; empty when no boundary maps were supplied
  int view_count() const { return static_cast<int>(images.size()); }
  bool has_hed() const { return !hed.empty(); }
  int width() const { return images.empty() ? 0 : images[0].width; }
  int height() const { return images.empty() ? 0 : images[0].height; }
};

/// K is the number of consecutive view_k.png files from k = 1. Boundary maps
/// must be present for every view or for none.
SupervisionBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const SupervisionBundle& bundle, const std::filesystem::path& dir);

G3D_NAMESPACE_END
