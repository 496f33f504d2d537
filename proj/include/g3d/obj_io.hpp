#pragma once

#include <filesystem>
#include <string>

#include "g3d/mesh.hpp"

G3D_NAMESPACE_BEGIN

/// Wavefront OBJ text: a header comment, then v, vn and f (v//vn) records with
/// 1-based indices. Numbers use 9 significant digits, independent of locale.
std::string format_obj(const TriMesh& mesh);
TriMesh parse_obj(const std::string& text);

void export_obj(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh import_obj(const std::filesystem::path& path);

G3D_NAMESPACE_END
