#pragma once

#include "g3d/math.hpp"

G3D_NAMESPACE_BEGIN

/// Disney-style material terms at one surface point.
struct MaterialSample {
  Vec3 kd{1, 1, 1};
  Real occlusion = 1;
  Real roughness = 1;
  Real metalness = 0;
  Vec3 kn{0, 0, 1};
};

Real ggx_distribution(Real n_dot_h, Real alpha_g);

/// Height-correlated Smith masking-shadowing G2.
Real smith_g2(Real n_dot_l, Real n_dot_v, Real alpha_g);

/// Specular colour k_s = (1 - m) 0.04 + m k_d.
Vec3 specular_color(const Vec3& kd, Real metalness);

Vec3 fresnel_schlick(const Vec3& f0, Real cos_theta);

/// (1 - m) k_d / pi + D G F / (4 (n.wo)(n.wi)), zero below either horizon.
/// With `include_diffuse` false only the specular lobe is returned.
Vec3 eval_bsdf(const MaterialSample& mat, const Vec3& n, const Vec3& wi, const Vec3& wo, bool include_diffuse = true);

G3D_NAMESPACE_END
