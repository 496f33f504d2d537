#include "g3d/camera_file.hpp"

#include <fstream>
#include <iterator>
#include <json.hpp>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

CameraView CameraSpec::view() const {
  return make_orbit_camera(azimuth_deg, elevation_deg, radius, fov_deg, width, height, tag);
}

std::vector<CameraSpec> parse_camera_file(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("camera file: ") + e.what());
  }
  require(j.is_array(), ErrorCode::kConfig, "camera file: expected a JSON list");
  std::vector<CameraSpec> out;
  try {
    for (const auto& e : j) {
      CameraSpec c;
      c.azimuth_deg = e.at("azimuth_deg").get<Real>();
      c.elevation_deg = e.at("elevation_deg").get<Real>();
      c.radius = e.at("radius").get<Real>();
      c.fov_deg = e.at("fov_deg").get<Real>();
      c.width = e.at("width").get<int>();
      c.height = e.at("height").get<int>();
      const auto& tag = e.at("tag");
      if (tag.is_string()) {
        require(tag.get<std::string>() == "novel", ErrorCode::kConfig, "camera file: tag must be an index or \"novel\"");
        c.tag = 0;
      } else {
        c.tag = tag.get<int>();
        require(c.tag >= 0, ErrorCode::kConfig, "camera file: negative tag");
      }
      require(c.width >= 1 && c.height >= 1 && c.radius > 0 && c.fov_deg > 0 && c.fov_deg < 180, ErrorCode::kConfig,
              "camera file: invalid camera parameters");
      out.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("camera file: ") + e.what());
  }
  return out;
}

std::string format_camera_file(const std::vector<CameraSpec>& cams) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : cams) {
    nlohmann::json e;
    e["azimuth_deg"] = c.azimuth_deg;
    e["elevation_deg"] = c.elevation_deg;
    e["radius"] = c.radius;
    e["fov_deg"] = c.fov_deg;
    e["width"] = c.width;
    e["height"] = c.height;
    if (c.tag == 0) e["tag"] = "novel";
    else e["tag"] = c.tag;
    j.push_back(e);
  }
  return j.dump(2) + "\n";
}

std::vector<CameraSpec> load_camera_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::kMissingFile, "cannot open camera file " + path.string());
  return parse_camera_file(std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>()));
}

void save_camera_file(const std::filesystem::path& path, const std::vector<CameraSpec>& cams) {
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path.string());
  f << format_camera_file(cams);
}

G3D_NAMESPACE_END
