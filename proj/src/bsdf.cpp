#include "g3d/bsdf.hpp"

#include <cmath>

G3D_NAMESPACE_BEGIN

Real ggx_distribution(Real n_dot_h, Real alpha_g) {
  const Real a2 = alpha_g * alpha_g;
  const Real d = n_dot_h * n_dot_h * (a2 - 1) + 1;
  return a2 / (static_cast<Real>(kPi) * d * d);
}

Real smith_g2(Real n_dot_l, Real n_dot_v, Real alpha_g) {
  if (n_dot_l <= 0 || n_dot_v <= 0) return 0;
  const Real a2 = alpha_g * alpha_g;
  const Real sl = std::sqrt(a2 + (1 - a2) * n_dot_l * n_dot_l);
  const Real sv = std::sqrt(a2 + (1 - a2) * n_dot_v * n_dot_v);
  return 2 * n_dot_l * n_dot_v / (n_dot_v * sl + n_dot_l * sv);
}

Vec3 specular_color(const Vec3& kd, Real metalness) {
  const Real base = Real(0.04) * (1 - metalness);
  return Vec3{base, base, base} + kd * metalness;
}

Vec3 fresnel_schlick(const Vec3& f0, Real cos_theta) {
  const Real x = 1 - clamp(cos_theta, 0, 1);
  const Real x5 = x * x * x * x * x;
  return f0 + (Vec3{1, 1, 1} - f0) * x5;
}

Vec3 eval_bsdf(const MaterialSample& mat, const Vec3& n, const Vec3& wi, const Vec3& wo, bool include_diffuse) {
  const Real nl = dot(n, wi), nv = dot(n, wo);
  if (nl <= 0 || nv <= 0) return {};
  const Vec3 h = normalize(wi + wo);
  const Real alpha = mat.roughness * mat.roughness;
  const Real D = ggx_distribution(dot(n, h), alpha);
  const Real G = smith_g2(nl, nv, alpha);
  const Vec3 F = fresnel_schlick(specular_color(mat.kd, mat.metalness), dot(wo, h));
  Vec3 f = F * (D * G / (4 * nl * nv));
  if (include_diffuse) f += mat.kd * ((1 - mat.metalness) / static_cast<Real>(kPi));
  return f;
}

G3D_NAMESPACE_END
