#include "g3d/hash_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

HashEncoder::HashEncoder(const HashEncoderConfig& config) : config_(config) {
  require(config.levels >= 1 && config.features_per_level >= 1 && config.base_resolution >= 1 &&
              config.log2_table_size >= 1 && config.log2_table_size <= 30 && config.growth >= 1.0,
          ErrorCode::kInvalidArgument, "invalid hash encoder configuration");
  const std::size_t table = std::size_t{1} << config.log2_table_size;
  std::size_t offset = 0;
  for (int l = 0; l < config.levels; ++l) {
    Level lv;
    lv.resolution = static_cast<int>(std::floor(config.base_resolution * std::pow(config.growth, l)));
    const std::size_t n = static_cast<std::size_t>(lv.resolution) + 1;
    const std::size_t dense_entries = n * n * n;
    lv.dense = dense_entries <= table;
    lv.entries = lv.dense ? dense_entries : table;
    lv.offset = offset;
    offset += lv.entries;
    levels_.push_back(lv);
  }
  param_count_ = offset * static_cast<std::size_t>(config.features_per_level);
}

std::vector<Real> HashEncoder::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-config_.init_scale, config_.init_scale);
  std::vector<Real> table(param_count_);
  for (Real& x : table) x = static_cast<Real>(dist(rng));
  return table;
}

void HashEncoder::corners(int level, const Vec3& p, Corners& c) const {
  const Level& lv = levels_[level];
  const int res = lv.resolution;
  int cell[3];
  Real frac[3];
  Real scale = Real(res) / 2;
  for (int d = 0; d < 3; ++d) {
    const Real x = p[d];
    c.clamped[d] = x < -1 || x > 1;
    const Real u = (clamp(x, -1, 1) + 1) * scale;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, res - 1);
    cell[d] = i;
    frac[d] = u - Real(i);
  }
  const std::size_t n = static_cast<std::size_t>(res) + 1;
  for (int k = 0; k < 8; ++k) {
    const int bx = k & 1, by = (k >> 1) & 1, bz = (k >> 2) & 1;
    const std::uint64_t ix = static_cast<std::uint64_t>(cell[0] + bx);
    const std::uint64_t iy = static_cast<std::uint64_t>(cell[1] + by);
    const std::uint64_t iz = static_cast<std::uint64_t>(cell[2] + bz);
    std::size_t idx;
    if (lv.dense) {
      idx = static_cast<std::size_t>(ix + n * (iy + n * iz));
    } else {
      const std::uint64_t h = (ix * 1ull) ^ (iy * 2654435761ull) ^ (iz * 805459861ull);
      idx = static_cast<std::size_t>(h & (lv.entries - 1));
    }
    c.index[k] = lv.offset + idx;
    const Real wx = bx ? frac[0] : 1 - frac[0];
    const Real wy = by ? frac[1] : 1 - frac[1];
    const Real wz = bz ? frac[2] : 1 - frac[2];
    c.weight[k] = wx * wy * wz;
    const Real sx = bx ? scale : -scale, sy = by ? scale : -scale, sz = bz ? scale : -scale;
    c.dweight[k] = {c.clamped[0] ? Real(0) : sx * wy * wz, c.clamped[1] ? Real(0) : wx * sy * wz,
                    c.clamped[2] ? Real(0) : wx * wy * sz};
  }
}

void HashEncoder::encode(std::span<const Real> table, const Vec3& p, std::span<Real> out) const {
  const int F = config_.features_per_level;
  Corners c;
  for (int l = 0; l < config_.levels; ++l) {
    corners(l, p, c);
    for (int f = 0; f < F; ++f) {
      Real acc = 0;
      for (int k = 0; k < 8; ++k) acc += c.weight[k] * table[c.index[k] * F + f];
      out[l * F + f] = acc;
    }
  }
}

void HashEncoder::encode_batch(std::span<const Real> table, std::span<const Real> points, std::span<Real> out) const {
  const std::size_t n = points.size() / 3;
  const std::size_t D = static_cast<std::size_t>(output_dim());
  for (std::size_t i = 0; i < n; ++i)
    encode(table, {points[3 * i], points[3 * i + 1], points[3 * i + 2]}, out.subspan(i * D, D));
}

void HashEncoder::encode_jvp_batch(std::span<const Real> table, std::span<const Real> points,
                                   std::span<Real> out) const {
  const std::size_t n = points.size() / 3;
  const int F = config_.features_per_level;
  const std::size_t D = static_cast<std::size_t>(output_dim());
  Corners c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p{points[3 * i], points[3 * i + 1], points[3 * i + 2]};
    for (int l = 0; l < config_.levels; ++l) {
      corners(l, p, c);
      for (int f = 0; f < F; ++f) {
        Real v = 0, tx = 0, ty = 0, tz = 0;
        for (int k = 0; k < 8; ++k) {
          const Real th = table[c.index[k] * F + f];
          v += c.weight[k] * th;
          tx += c.dweight[k][0] * th;
          ty += c.dweight[k][1] * th;
          tz += c.dweight[k][2] * th;
        }
        const std::size_t o = i * D + static_cast<std::size_t>(l * F + f);
        out[o] = v;
        out[n * D + o] = tx;
        out[2 * n * D + o] = ty;
        out[3 * n * D + o] = tz;
      }
    }
  }
}

void HashEncoder::backward_batch(std::span<const Real> table, std::span<const Real> points,
                                 std::span<const Real> grad_out, std::span<Real> grad_table,
                                 std::span<Real> grad_points) const {
  const std::size_t n = points.size() / 3;
  const int F = config_.features_per_level;
  const std::size_t D = static_cast<std::size_t>(output_dim());
  const bool want_table = !grad_table.empty();
  const bool want_points = !grad_points.empty();
  Corners c;
  for (std::size_t i = 0; i < n; ++i) {
    const Real* g = grad_out.data() + i * D;
    bool any = false;
    for (std::size_t d = 0; d < D && !any; ++d) any = g[d] != 0;
    if (!any) continue;
    const Vec3 p{points[3 * i], points[3 * i + 1], points[3 * i + 2]};
    Real gp[3] = {0, 0, 0};
    for (int l = 0; l < config_.levels; ++l) {
      corners(l, p, c);
      for (int f = 0; f < F; ++f) {
        const Real go = g[l * F + f];
        if (go == 0) continue;
        for (int k = 0; k < 8; ++k) {
          const std::size_t e = c.index[k] * F + f;
          if (want_table) grad_table[e] += c.weight[k] * go;
          if (want_points) {
            const Real th = table[e];
            gp[0] += c.dweight[k][0] * th * go;
            gp[1] += c.dweight[k][1] * th * go;
            gp[2] += c.dweight[k][2] * th * go;
          }
        }
      }
    }
    if (want_points)
      for (int d = 0; d < 3; ++d) grad_points[3 * i + d] += gp[d];
  }
}

void HashEncoder::backward_jvp_batch(std::span<const Real> points, std::span<const Real> grad_out,
                                     std::span<Real> grad_table) const {
  const std::size_t n = points.size() / 3;
  const int F = config_.features_per_level;
  const std::size_t D = static_cast<std::size_t>(output_dim());
  Corners c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p{points[3 * i], points[3 * i + 1], points[3 * i + 2]};
    for (int l = 0; l < config_.levels; ++l) {
      corners(l, p, c);
      for (int f = 0; f < F; ++f) {
        const std::size_t o = i * D + static_cast<std::size_t>(l * F + f);
        const Real gv = grad_out[o], gx = grad_out[n * D + o], gy = grad_out[2 * n * D + o],
                   gz = grad_out[3 * n * D + o];
        if (gv == 0 && gx == 0 && gy == 0 && gz == 0) continue;
        for (int k = 0; k < 8; ++k)
          grad_table[c.index[k] * F + f] +=
              c.weight[k] * gv + c.dweight[k][0] * gx + c.dweight[k][1] * gy + c.dweight[k][2] * gz;
      }
    }
  }
}

Var hash_encode(Tape& tape, const HashEncoder& encoder, Var table, Var points) {
  require(tape.size(table) == encoder.param_count(), ErrorCode::kShapeMismatch, "hash_encode: table size mismatch");
  require(tape.size(points) % 3 == 0, ErrorCode::kShapeMismatch, "hash_encode: points must be n x 3");
  const std::size_t n = tape.size(points) / 3;
  std::vector<Real> out(n * static_cast<std::size_t>(encoder.output_dim()));
  encoder.encode_batch(tape.value(table), tape.value(points), out);
  return tape.record(std::move(out), {table, points}, [&encoder, table, points](Tape& t, Var self) {
    std::span<Real> gt, gp;
    if (t.requires_grad(table)) gt = t.grad(table);
    if (t.requires_grad(points)) gp = t.grad(points);
    encoder.backward_batch(t.value(table), t.value(points), t.grad(self), gt, gp);
  });
}

Var hash_encode_jvp(Tape& tape, const HashEncoder& encoder, Var table, Var points) {
  require(tape.size(table) == encoder.param_count(), ErrorCode::kShapeMismatch,
          "hash_encode_jvp: table size mismatch");
  const std::size_t n = tape.size(points) / 3;
  std::vector<Real> out(4 * n * static_cast<std::size_t>(encoder.output_dim()));
  encoder.encode_jvp_batch(tape.value(table), tape.value(points), out);
  return tape.record(std::move(out), {table}, [&encoder, table, points](Tape& t, Var self) {
    encoder.backward_jvp_batch(t.value(points), t.grad(self), t.grad(table));
  });
}

G3D_NAMESPACE_END
