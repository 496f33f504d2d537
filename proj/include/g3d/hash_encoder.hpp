#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "g3d/math.hpp"
#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

struct HashEncoderConfig {
  int levels = 16;
  int features_per_level = 2;
  int log2_table_size = 19;
  int base_resolution = 16;
  double growth = 1.38;
  Real init_scale = Real(1e-4);
};

/// Multiresolution hash-grid encoding of points in [-1,1]^3.
///
/// Level l has lattice resolution floor(base * growth^l). Levels whose
/// (res+1)^3 corners fit in the table are indexed densely; finer levels use the
/// spatial hash x*1 ^ y*2654435761 ^ z*805459861 modulo the table size. Each
/// level contributes a trilinear blend of its eight corner feature vectors.
class HashEncoder {
 public:
  HashEncoder() : HashEncoder(HashEncoderConfig{}) {}
  explicit HashEncoder(const HashEncoderConfig& config);

  const HashEncoderConfig& config() const { return config_; }
  int output_dim() const { return config_.levels * config_.features_per_level; }
  std::size_t param_count() const { return param_count_; }
  int level_resolution(int level) const { return levels_[level].resolution; }
  bool level_is_dense(int level) const { return levels_[level].dense; }

  std::vector<Real> init_params(std::uint64_t seed) const;

  void encode(std::span<const Real> table, const Vec3& p, std::span<Real> out) const;

  /// Forward for n points (n x 3 row-major) into out (n x D).
  void encode_batch(std::span<const Real> table, std::span<const Real> points, std::span<Real> out) const;

  /// Forward-mode derivative: out holds four n x D blocks, the encoding and its
  /// partial derivatives along x, y and z.
  void encode_jvp_batch(std::span<const Real> table, std::span<const Real> points, std::span<Real> out) const;

  /// Accumulates gradients of the plain encoding. grad_points may be empty.
  void backward_batch(std::span<const Real> table, std::span<const Real> points, std::span<const Real> grad_out,
                      std::span<Real> grad_table, std::span<Real> grad_points) const;

  /// Accumulates table gradients of the jvp output (points are constants).
  void backward_jvp_batch(std::span<const Real> points, std::span<const Real> grad_out,
                          std::span<Real> grad_table) const;

 private:
  struct Level {
    int resolution = 0;
    std::size_t offset = 0;  // in entries
    std::size_t entries = 0;
    bool dense = false;
  };

  struct Corners {
    std::array<std::size_t, 8> index;       // entry index into table (times F gives offset)
    std::array<Real, 8> weight;
    std::array<std::array<Real, 3>, 8> dweight;  // d weight / d p
    bool clamped[3];
  };

  void corners(int level, const Vec3& p, Corners& c) const;

  HashEncoderConfig config_;
  std::vector<Level> levels_;
  std::size_t param_count_ = 0;
};

/// Tape op: encoding of `points` (n x 3). Differentiable in table and points.
Var hash_encode(Tape& tape, const HashEncoder& encoder, Var table, Var points);

/// Tape op: encoding and its spatial Jacobian (4 blocks of n x D). Points are
/// treated as constants.
Var hash_encode_jvp(Tape& tape, const HashEncoder& encoder, Var table, Var points);

G3D_NAMESPACE_END
