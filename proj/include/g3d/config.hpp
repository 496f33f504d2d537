#pragma once

// Scalar precision is chosen at build time. Both variants can be linked into
// one binary because every symbol lives in a precision-tagged inline namespace.
#if defined(G3D_DOUBLE)
#define G3D_PRECISION_NS f64
#else
#define G3D_PRECISION_NS f32
#endif

#define G3D_NAMESPACE_BEGIN \
  namespace g3d {           \
  inline namespace G3D_PRECISION_NS {
#define G3D_NAMESPACE_END \
  }                       \
  }

G3D_NAMESPACE_BEGIN

#if defined(G3D_DOUBLE)
using Real = double;
#else
using Real = float;
#endif

inline constexpr double kPi = 3.14159265358979323846;

G3D_NAMESPACE_END
