#include "g3d/shape_template.hpp"

#include <cmath>
#include <limits>

#include "g3d/error.hpp"
#include "g3d/obj_io.hpp"

G3D_NAMESPACE_BEGIN

Real Capsule::sdf(const Vec3& p) const {
  const Vec3 ab = b - a;
  const Real len2 = dot(ab, ab);
  const Real t = len2 > 0 ? clamp(dot(p - a, ab) / len2, 0, 1) : Real(0);
  return norm(p - (a + ab * t)) - radius;
}

ShapeTemplate ShapeTemplate::sphere(Real radius, Vec3 center) {
  require(radius > 0, ErrorCode::kInvalidArgument, "sphere radius must be positive");
  return capsules({Capsule{center, center, radius}});
}

ShapeTemplate ShapeTemplate::capsules(std::vector<Capsule> parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "template needs at least one primitive");
  ShapeTemplate t;
  t.parts_ = std::move(parts);
  return t;
}

ShapeTemplate ShapeTemplate::mannequin() {
  const Real arm_r = Real(0.06), leg_r = Real(0.08);
  return capsules({
      {{0, Real(-0.15), 0}, {0, Real(0.35), 0}, Real(0.17)},                         // torso
      {{0, Real(0.6), 0}, {0, Real(0.6), 0}, Real(0.13)},                            // head
      {{Real(0.2), Real(0.35), 0}, {Real(0.55), Real(-0.05), 0}, arm_r},             // arms
      {{Real(-0.2), Real(0.35), 0}, {Real(-0.55), Real(-0.05), 0}, arm_r},
      {{Real(0.1), Real(-0.2), 0}, {Real(0.18), Real(-0.85), 0}, leg_r},             // legs
      {{Real(-0.1), Real(-0.2), 0}, {Real(-0.18), Real(-0.85), 0}, leg_r},
  });
}

ShapeTemplate ShapeTemplate::from_mesh(const TriMesh& mesh) {
  const MeshReport r = validate_mesh(mesh);
  require(!mesh.empty() && r.watertight, ErrorCode::kInvalidArgument,
          "mesh template must be watertight (" + std::to_string(r.boundary_edges) + " boundary edges, " +
              std::to_string(r.nonmanifold_edges) + " non-manifold edges)");
  ShapeTemplate t;
  t.mesh_ = std::make_shared<const TriMesh>(mesh);
  return t;
}

ShapeTemplate ShapeTemplate::parse(const std::string& spec) {
  if (spec == "mannequin") return mannequin();
  if (spec.rfind("sphere:", 0) == 0) {
    try {
      return sphere(static_cast<Real>(std::stod(spec.substr(7))));
    } catch (const std::logic_error&) {
      fail(ErrorCode::kConfig, "template: bad sphere radius in '" + spec + "'");
    }
  }
  if (spec.rfind("mesh:", 0) == 0) return from_mesh(import_obj(spec.substr(5)));
  fail(ErrorCode::kConfig, "template: expected mannequin, sphere:<r> or mesh:<path>, got '" + spec + "'");
}

Real ShapeTemplate::sdf(const Vec3& p) const {
  if (mesh_) {
    Real d = std::numeric_limits<Real>::infinity();
    for (const auto& t : mesh_->triangles)
      d = std::min(d, point_triangle_distance(p, mesh_->positions[t[0]], mesh_->positions[t[1]], mesh_->positions[t[2]]));
    return winding_number(*mesh_, p) > Real(0.5) ? -d : d;
  }
  Real d = std::numeric_limits<Real>::infinity();
  for (const auto& c : parts_) d = std::min(d, c.sdf(p));
  return d;
}

int ShapeTemplate::nearest_part(const Vec3& p) const {
  int best = -1;
  Real d = std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const Real di = parts_[i].sdf(p);
    if (di < d) {
      d = di;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Real point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Closest point by Voronoi region classification.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const Real d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return norm(ap);
  const Vec3 bp = p - b;
  const Real d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return norm(bp);
  const Real vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return norm(p - (a + ab * (d1 / (d1 - d3))));
  const Vec3 cp = p - c;
  const Real d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return norm(cp);
  const Real vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return norm(p - (a + ac * (d2 / (d2 - d6))));
  const Real va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return norm(p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)))));
  const Real denom = 1 / (va + vb + vc);
  return norm(p - (a + ab * (vb * denom) + ac * (vc * denom)));
}

Real winding_number(const TriMesh& mesh, const Vec3& p) {
  double total = 0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.positions[t[0]] - p, b = mesh.positions[t[1]] - p, c = mesh.positions[t[2]] - p;
    const double la = norm(a), lb = norm(b), lc = norm(c);
    const double num = det3(a, b, c);
    const double den = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
    total += 2 * std::atan2(num, den);
  }
  return static_cast<Real>(total / (4 * kPi));
}

G3D_NAMESPACE_END
