#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "g3d/camera.hpp"

G3D_NAMESPACE_BEGIN

/// One entry of a camera set file. tag is the known view index (1-based) or 0
/// for a novel view, written as the string "novel".
struct CameraSpec {
  Real azimuth_deg = 0;
  Real elevation_deg = 0;
  Real radius = 3;
  Real fov_deg = 40;
  int width = 512;
  int height = 512;
  int tag = 0;

  CameraView view() const;
};

/// JSON list of {azimuth_deg, elevation_deg, radius, fov_deg, width, height, tag}.
std::vector<CameraSpec> parse_camera_file(const std::string& json_text);
std::string format_camera_file(const std::vector<CameraSpec>& cams);

std::vector<CameraSpec> load_camera_file(const std::filesystem::path& path);
void save_camera_file(const std::filesystem::path& path, const std::vector<CameraSpec>& cams);

G3D_NAMESPACE_END
