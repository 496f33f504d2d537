#pragma once

#include <memory>
#include <string>
#include <vector>

#include "g3d/mesh.hpp"

G3D_NAMESPACE_BEGIN

/// Segment a-b swept by a ball of radius r; a sphere when a == b.
struct Capsule {
  Vec3 a, b;
  Real radius = 0;

  Real sdf(const Vec3& p) const;
};

/// Target shape for grid initialization. Negative inside.
class ShapeTemplate {
 public:
  static ShapeTemplate sphere(Real radius, Vec3 center = {});
  static ShapeTemplate capsules(std::vector<Capsule> parts);
  /// Torso capsule, head sphere and four limb capsules in an A-pose, about
  /// 1.66 units tall and centred near the origin.
  static ShapeTemplate mannequin();
  /// Unsigned distance to the nearest triangle, negative where the generalized
  /// winding number exceeds 1/2. Rejects meshes that are not watertight.
  static ShapeTemplate from_mesh(const TriMesh& mesh);
  /// "mannequin", "sphere:<r>" or "mesh:<path.obj>".
  static ShapeTemplate parse(const std::string& spec);

  Real sdf(const Vec3& p) const;
  /// Index of the primitive with the smallest distance (-1 for mesh templates).
  int nearest_part(const Vec3& p) const;
  const std::vector<Capsule>& parts() const { return parts_; }

 private:
  std::vector<Capsule> parts_;
  std::shared_ptr<const TriMesh> mesh_;
};

/// Distance from p to triangle abc.
Real point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Generalized winding number of a closed triangle mesh around p.
Real winding_number(const TriMesh& mesh, const Vec3& p);

G3D_NAMESPACE_END
