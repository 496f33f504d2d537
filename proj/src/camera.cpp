#include "g3d/camera.hpp"

#include <cmath>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

Real CameraView::focal() const { return Real(0.5) * static_cast<Real>(height) / std::tan(fov_y / 2); }

Vec3 CameraView::position() const { return -(rotation.transposed() * translation); }

Vec3 CameraView::ray_direction(Real u, Real v) const {
  const Real f = focal();
  const Vec3 dc{(u - Real(0.5) * width) / f, -(v - Real(0.5) * height) / f, Real(-1)};
  return rotation.transposed() * dc;
}

CameraView make_orbit_camera(Real azimuth_deg, Real elevation_deg, Real radius, Real fov_deg, int width, int height,
                             int tag) {
  require(radius > 0, ErrorCode::kInvalidArgument, "camera radius must be positive");
  require(fov_deg > 0 && fov_deg < 180, ErrorCode::kInvalidArgument, "camera fov must lie in (0, 180) degrees");
  require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument, "camera image size must be positive");
  const double az = azimuth_deg * kPi / 180, el = elevation_deg * kPi / 180;
  const Vec3 eye{static_cast<Real>(radius * std::sin(az) * std::cos(el)), static_cast<Real>(radius * std::sin(el)),
                 static_cast<Real>(radius * std::cos(az) * std::cos(el))};
  const Vec3 forward = normalize(-eye);
  Vec3 right = cross(forward, Vec3{0, 1, 0});
  if (norm(right) < Real(1e-6)) right = Vec3{1, 0, 0};
  right = normalize(right);
  const Vec3 up = cross(right, forward);
  CameraView cam;
  cam.rotation = Mat3::from_rows(right, up, -forward);
  cam.translation = -(cam.rotation * eye);
  cam.fov_y = static_cast<Real>(fov_deg * kPi / 180);
  cam.width = width;
  cam.height = height;
  cam.tag = tag;
  return cam;
}

std::vector<CameraView> make_turntable_cameras(int K, Real radius, Real fov, int width, int height) {
  require(K >= 1, ErrorCode::kInvalidArgument, "turntable needs at least one camera");
  std::vector<CameraView> cams;
  const Real fov_deg = static_cast<Real>(fov * 180 / kPi);
  for (int k = 0; k < K; ++k)
    cams.push_back(make_orbit_camera(static_cast<Real>(360.0 * k / K), 0, radius, fov_deg, width, height, k + 1));
  return cams;
}

Projection project_point(const CameraView& cam, const Vec3& p) {
  std::array<Vec3, 2> j;
  return project_point(cam, p, j);
}

Projection project_point(const CameraView& cam, const Vec3& p, std::array<Vec3, 2>& jacobian) {
  const Vec3 c = cam.rotation * p + cam.translation;
  const Real f = cam.focal();
  Projection out;
  out.depth = -c.z;
  out.behind = out.depth < kNearDepth;
  const Real d = out.behind ? kNearDepth : out.depth;
  out.u = Real(0.5) * cam.width + f * c.x / d;
  out.v = Real(0.5) * cam.height - f * c.y / d;
  // d/dc of (u, v): u = f x / d, v = -f y / d with d = -z.
  const Vec3 du_dc{f / d, 0, f * c.x / (d * d)};
  const Vec3 dv_dc{0, -f / d, -f * c.y / (d * d)};
  const Mat3 rt = cam.rotation.transposed();
  jacobian[0] = rt * du_dc;
  jacobian[1] = rt * dv_dc;
  return out;
}

Vec3 unproject(const CameraView& cam, Real u, Real v, Real depth) {
  const Real f = cam.focal();
  const Vec3 c{(u - Real(0.5) * cam.width) * depth / f, -(v - Real(0.5) * cam.height) * depth / f, -depth};
  return cam.rotation.transposed() * (c - cam.translation);
}

CameraView resized(const CameraView& cam, int width, int height) {
  CameraView out = cam;
  out.width = width;
  out.height = height;
  return out;
}

G3D_NAMESPACE_END
