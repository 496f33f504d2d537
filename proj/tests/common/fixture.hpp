#pragma once

#include <string>

#include "g3d/bundle.hpp"
#include "g3d/pipeline.hpp"
#include "temp_dir.hpp"

namespace g3d_test {

// Three-view mannequin bundle at 512 px on disk, built once per process.
inline const std::filesystem::path& fixture_bundle_dir() {
  static TempDir dir;
  static const bool written = [] {
    g3d::FixtureOptions o;
    o.views = 3;
    o.mesh_resolution = 32;
    g3d::save_bundle(g3d::render_fixture(g3d::ShapeTemplate::mannequin(), o), dir.path());
    return true;
  }();
  (void)written;
  return dir.path();
}

// Small but complete run configuration over the fixture bundle. The sphere
// template resolves on an 8^3 grid where the mannequin's limbs would not.
inline std::string tiny_config_text(const std::filesystem::path& output, int iterations = 6) {
  return "bundle = " + fixture_bundle_dir().string() + "\n" +
         "output = " + output.string() + "\n" +
         "template = sphere:0.6\n"
         "seed = 5\n"
         "init_iterations = 200\n"
         "init_points = 500\n"
         "iterations = " + std::to_string(iterations) + "\n"
         "render_resolution = 16\n"
         "export_resolution = 32\n"
         "checkpoint_every = 3\n"
         "low_resolution = 6\n"
         "high_resolution = 8\n"
         "geometry_hash_levels = 4\n"
         "geometry_hash_log2_table = 10\n"
         "texture_hash_levels = 4\n"
         "texture_hash_log2_table = 10\n"
         "env_width = 8\n"
         "env_height = 4\n"
         "eikonal_points = 64\n"
         "feature_refresh = 2\n";
}

}  // namespace g3d_test
