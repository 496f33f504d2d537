#pragma once

#include <array>
#include <vector>

#include "g3d/math.hpp"

G3D_NAMESPACE_BEGIN

/// Pinhole camera. World-to-camera is x_cam = rotation * x + translation; the
/// camera looks along -z with +y up. tag is the known view index k (1-based)
/// or 0 for a novel view.
struct CameraView {
  Mat3 rotation;
  Vec3 translation;
  Real fov_y = Real(0.6981317);  // radians
  int width = 256;
  int height = 256;
  int tag = 0;

  Real focal() const;
  Vec3 position() const;
  /// Unnormalized world-space direction through continuous pixel (u, v).
  Vec3 ray_direction(Real u, Real v) const;
};

struct Projection {
  Real u = 0, v = 0, depth = 0;
  bool behind = false;
};

inline constexpr Real kNearDepth = Real(1e-3);

/// Camera at spherical position radius * (sin(az) cos(el), sin(el), cos(az) cos(el))
/// looking at the origin. Angles in degrees.
CameraView make_orbit_camera(Real azimuth_deg, Real elevation_deg, Real radius, Real fov_deg, int width, int height,
                             int tag);

/// K cameras at azimuths 360 k / K, elevation 0, starting on +Z. fov in radians.
std::vector<CameraView> make_turntable_cameras(int K, Real radius, Real fov, int width = 256, int height = 256);

/// u = W/2 + f x/d, v = H/2 - f y/d with d = -z_cam. Points with d below the
/// near depth are flagged as behind.
Projection project_point(const CameraView& cam, const Vec3& p);

/// Projection together with d(u, v)/dp (rows: u, v).
Projection project_point(const CameraView& cam, const Vec3& p, std::array<Vec3, 2>& jacobian);

Vec3 unproject(const CameraView& cam, Real u, Real v, Real depth);

/// Same camera at a different image size.
CameraView resized(const CameraView& cam, int width, int height);

G3D_NAMESPACE_END
