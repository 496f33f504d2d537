#include "g3d/obj_io.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

void append_number(std::string& out, Real v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, static_cast<double>(v), std::chars_format::general, 9);
  out.append(buf, r.ptr);
}

Real parse_number(std::string_view s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  require(r.ec == std::errc{}, ErrorCode::kIo, "obj: bad number '" + std::string(s) + "'");
  return static_cast<Real>(v);
}

std::uint32_t parse_index(std::string_view s) {
  const auto slash = s.find('/');
  if (slash != std::string_view::npos) s = s.substr(0, slash);
  long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  require(r.ec == std::errc{} && v >= 1, ErrorCode::kIo, "obj: bad face index '" + std::string(s) + "'");
  return static_cast<std::uint32_t>(v - 1);
}

}  // namespace

std::string format_obj(const TriMesh& mesh) {
  require(mesh.normals.empty() || mesh.normals.size() == mesh.positions.size(), ErrorCode::kShapeMismatch,
          "obj: normal count differs from vertex count");
  std::string out = "# g3d mesh\n";
  auto vec = [&out](const char* tag, const Vec3& p) {
    out += tag;
    for (int c = 0; c < 3; ++c) {
      out += ' ';
      append_number(out, p[c]);
    }
    out += '\n';
  };
  for (const Vec3& p : mesh.positions) vec("v", p);
  for (const Vec3& n : mesh.normals) vec("vn", n);
  const bool with_normals = !mesh.normals.empty();
  for (const auto& t : mesh.triangles) {
    out += 'f';
    for (auto i : t) {
      out += ' ';
      out += std::to_string(i + 1);
      if (with_normals) {
        out += "//";
        out += std::to_string(i + 1);
      }
    }
    out += '\n';
  }
  return out;
}

TriMesh parse_obj(const std::string& text) {
  TriMesh mesh;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v" || tag == "vn") {
      std::string a, b, c;
      require(static_cast<bool>(ls >> a >> b >> c), ErrorCode::kIo, "obj: short vertex record");
      const Vec3 p{parse_number(a), parse_number(b), parse_number(c)};
      (tag == "v" ? mesh.positions : mesh.normals).push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(parse_index(tok));
      require(idx.size() >= 3, ErrorCode::kIo, "obj: face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  for (const auto& t : mesh.triangles)
    for (auto i : t) require(i < mesh.positions.size(), ErrorCode::kIo, "obj: face index out of range");
  return mesh;
}

void export_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  const std::string text = format_obj(mesh);
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path.string());
  f << text;
  require(static_cast<bool>(f), ErrorCode::kIo, "write failed: " + path.string());
}

TriMesh import_obj(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kMissingFile, "cannot open " + path.string());
  return parse_obj(std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>()));
}

G3D_NAMESPACE_END
