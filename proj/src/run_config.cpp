#include "g3d/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

template <class T>
std::string number_text(T x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T x{};
  auto r = std::from_chars(text.data(), text.data() + text.size(), x);
  require(r.ec == std::errc{} && r.ptr == text.data() + text.size(), ErrorCode::kConfig,
          "config: bad value for " + key + ": '" + text + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorCode::kConfig, "config: bad boolean for " + key + ": '" + text + "'");
}

enum class Kind { kPlain, kPath, kPrefixedPath };

struct Key {
  const char* name;
  Kind kind;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Key number_key(const char* name, T RunConfig::*field) {
  return {name, Kind::kPlain, [field](const RunConfig& c) { return number_text(c.*field); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_number<T>(name, v); }};
}

template <class Sub, class T>
Key nested_key(const char* name, Sub RunConfig::*sub, T Sub::*field) {
  return {name, Kind::kPlain, [sub, field](const RunConfig& c) { return number_text(c.*sub.*field); },
          [sub, field, name](RunConfig& c, const std::string& v) { c.*sub.*field = parse_number<T>(name, v); }};
}

Key string_key(const char* name, std::string RunConfig::*field, Kind kind = Kind::kPlain) {
  return {name, kind, [field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, const std::string& v) { c.*field = v; }};
}

Key bool_key(const char* name, bool RunConfig::*field) {
  return {name, Kind::kPlain, [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      string_key("bundle", &RunConfig::bundle, Kind::kPath),
      string_key("cameras", &RunConfig::cameras, Kind::kPath),
      string_key("output", &RunConfig::output, Kind::kPath),
      string_key("template", &RunConfig::shape, Kind::kPrefixedPath),
      number_key("seed", &RunConfig::seed),
      number_key("init_iterations", &RunConfig::init_iterations),
      number_key("init_points", &RunConfig::init_points),
      number_key("iterations", &RunConfig::iterations),
      number_key("render_resolution", &RunConfig::render_resolution),
      number_key("export_resolution", &RunConfig::export_resolution),
      number_key("checkpoint_every", &RunConfig::checkpoint_every),
      number_key("log_every", &RunConfig::log_every),
      number_key("low_resolution", &RunConfig::low_resolution),
      number_key("high_resolution", &RunConfig::high_resolution),
      nested_key("geometry_hash_levels", &RunConfig::geometry_encoder, &HashEncoderConfig::levels),
      nested_key("geometry_hash_log2_table", &RunConfig::geometry_encoder, &HashEncoderConfig::log2_table_size),
      nested_key("geometry_hash_base_resolution", &RunConfig::geometry_encoder, &HashEncoderConfig::base_resolution),
      nested_key("geometry_hash_growth", &RunConfig::geometry_encoder, &HashEncoderConfig::growth),
      nested_key("texture_hash_levels", &RunConfig::texture_encoder, &HashEncoderConfig::levels),
      nested_key("texture_hash_log2_table", &RunConfig::texture_encoder, &HashEncoderConfig::log2_table_size),
      nested_key("texture_hash_base_resolution", &RunConfig::texture_encoder, &HashEncoderConfig::base_resolution),
      nested_key("texture_hash_growth", &RunConfig::texture_encoder, &HashEncoderConfig::growth),
      number_key("env_width", &RunConfig::env_width),
      number_key("env_height", &RunConfig::env_height),
      number_key("mlp_lr", &RunConfig::mlp_lr),
      number_key("grid_lr", &RunConfig::grid_lr),
      nested_key("lambda_known", &RunConfig::weights, &LossWeights::known),
      nested_key("lambda_novel", &RunConfig::weights, &LossWeights::novel),
      nested_key("lambda_hed", &RunConfig::weights, &LossWeights::hed),
      nested_key("lambda_eikonal", &RunConfig::weights, &LossWeights::eikonal),
      number_key("eikonal_points", &RunConfig::eikonal_points),
      bool_key("symmetric_masks", &RunConfig::symmetric_masks),
      bool_key("specular", &RunConfig::specular),
      number_key("camera_radius", &RunConfig::camera_radius),
      number_key("camera_fov_deg", &RunConfig::camera_fov_deg),
      number_key("novel_elevation_min", &RunConfig::novel_elevation_min),
      number_key("novel_elevation_max", &RunConfig::novel_elevation_max),
      number_key("feature_refresh", &RunConfig::feature_refresh),
      number_key("band_cells", &RunConfig::band_cells),
      string_key("denoiser", &RunConfig::denoiser),
      string_key("features", &RunConfig::features, Kind::kPrefixedPath),
      string_key("boundary", &RunConfig::boundary, Kind::kPrefixedPath),
      string_key("prompt", &RunConfig::prompt),
      number_key("omega", &RunConfig::omega),
      number_key("t_min", &RunConfig::t_min),
      number_key("t_max_start", &RunConfig::t_max_start),
      number_key("t_max_end", &RunConfig::t_max_end),
      number_key("provider_timeout", &RunConfig::provider_timeout),
      number_key("provider_retries", &RunConfig::provider_retries),
  };
  return k;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string resolve(const std::string& value, const std::filesystem::path& base) {
  if (value.empty() || base.empty()) return value;
  const std::filesystem::path p(value);
  return p.is_absolute() ? value : (base / p).lexically_normal().string();
}

// "mesh:<path>" and "file:<dir>" carry a path after the prefix.
std::string resolve_prefixed(const std::string& value, const std::filesystem::path& base) {
  for (const char* prefix : {"mesh:", "file:"}) {
    const std::string pre = prefix;
    if (value.rfind(pre, 0) == 0) return pre + resolve(value.substr(pre.size()), base);
  }
  return value;
}

void validate(const RunConfig& c) {
  const auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::kConfig, "config: " + what); };
  check(c.init_iterations >= 0 && c.iterations >= 0, "iteration counts must be non-negative");
  check(c.init_points > 0, "init_points must be positive");
  check(c.low_resolution >= 1 && c.high_resolution >= 1, "grid resolutions must be at least 1");
  check(c.render_resolution >= 8 && c.export_resolution >= 8, "render resolutions must be at least 8");
  check(c.checkpoint_every >= 0 && c.log_every >= 1, "checkpoint_every >= 0 and log_every >= 1 required");
  check(c.env_width >= 2 && c.env_height >= 2, "environment map must be at least 2x2");
  check(c.mlp_lr > 0 && c.grid_lr > 0, "learning rates must be positive");
  check(c.weights.known >= 0 && c.weights.novel >= 0 && c.weights.hed >= 0 && c.weights.eikonal >= 0,
        "loss weights must be non-negative");
  check(c.eikonal_points > 0, "eikonal_points must be positive");
  check(c.camera_radius > 0 && c.camera_fov_deg > 0 && c.camera_fov_deg < 180, "bad camera radius or fov");
  check(c.novel_elevation_min <= c.novel_elevation_max, "novel elevation range is empty");
  check(c.feature_refresh >= 1, "feature_refresh must be at least 1");
  check(c.band_cells >= 0, "band_cells must be non-negative");
  check(c.t_min >= 0 && c.t_min <= c.t_max_end && c.t_min <= c.t_max_start && c.t_max_start <= 1 && c.t_max_end <= 1,
        "noise levels must satisfy 0 <= t_min <= t_max <= 1");
  check(c.omega >= 0, "omega must be non-negative");
  check(c.provider_timeout > 0 && c.provider_retries >= 0, "bad provider timeout or retry count");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kConfig,
            "config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const Key* k = nullptr;
    for (const auto& cand : keys())
      if (key == cand.name) k = &cand;
    require(k != nullptr, ErrorCode::kConfig, "config line " + std::to_string(number) + ": unknown key '" + key + "'");
    require(seen.insert(key).second, ErrorCode::kConfig,
            "config line " + std::to_string(number) + ": repeated key '" + key + "'");
    switch (k->kind) {
      case Kind::kPlain: k->set(c, value); break;
      case Kind::kPath: k->set(c, resolve(value, base_dir)); break;
      case Kind::kPrefixedPath: k->set(c, resolve_prefixed(value, base_dir)); break;
    }
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
  return out;
}

G3D_NAMESPACE_END
