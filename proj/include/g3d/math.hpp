#pragma once

#include <array>
#include <cmath>

#include "g3d/config.hpp"

G3D_NAMESPACE_BEGIN

struct Vec3 {
  Real x = 0, y = 0, z = 0;

  constexpr Real& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr Real operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(Real s) { x *= s; y *= s; z *= s; return *this; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, Real s) { return a *= s; }
constexpr Vec3 operator*(Real s, Vec3 a) { return a *= s; }
constexpr Vec3 mul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

constexpr Real dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Real norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(const Vec3& a) {
  const Real n = norm(a);
  return n > 0 ? a * (Real(1) / n) : Vec3{};
}
constexpr Real det3(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

// Gradient of normalize(a) pulled back: given dL/dn for n = a/|a|, returns dL/da.
inline Vec3 normalize_backward(const Vec3& a, const Vec3& grad_n) {
  const Real len = norm(a);
  if (len <= 0) return {};
  const Vec3 n = a * (Real(1) / len);
  return (grad_n - n * dot(n, grad_n)) * (Real(1) / len);
}

// Row-major 3x3.
struct Mat3 {
  std::array<Real, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  constexpr Real operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr Real& operator()(int r, int c) { return m[r * 3 + c]; }

  constexpr Vec3 row(int r) const { return {m[r * 3], m[r * 3 + 1], m[r * 3 + 2]}; }
  constexpr Vec3 operator*(const Vec3& v) const { return {dot(row(0), v), dot(row(1), v), dot(row(2), v)}; }
  constexpr Mat3 transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
  }
  static constexpr Mat3 from_rows(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mat3 r;
    r.m = {a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z};
    return r;
  }
};

inline Real clamp(Real v, Real lo, Real hi) { return v < lo ? lo : (v > hi ? hi : v); }
inline Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }
inline Real softplus(Real x) { return x > 20 ? x : std::log1p(std::exp(x)); }

G3D_NAMESPACE_END
