#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "g3d/camera.hpp"
#include "g3d/feature_map.hpp"
#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

inline constexpr Real kFusionAlpha = Real(1e-8);

/// Cosine weights w_k = (f_k . f_r) / max(|f_k| |f_r|, alpha), clamped at 0.
/// samples holds K rows of C values; r is the 0-based reference row. Views
/// flagged invalid (valid[k] == 0) get weight 0. Returns how many weights were
/// clamped from a negative value through `clamped` when non-null.
std::vector<Real> similarity_weights(std::span<const Real> samples, int K, int C, int r, Real alpha = kFusionAlpha,
                                     std::span<const std::uint8_t> valid = {}, int* clamped = nullptr);

/// Weighted average sum_k w_k f_k / sum_k w_k. Returns false (and leaves out
/// untouched) when the weights sum to zero.
bool weighted_average(std::span<const Real> samples, std::span<const Real> weights, int C, std::span<Real> out);

struct FusionStats {
  std::size_t degenerate_points = 0;  // all weights zero, reference returned
  std::size_t clamped_weights = 0;    // negative cosine similarities set to 0
};

/// Fuses one point. Falls back to the reference feature when every weight is
/// zero; returns true in that case.
bool fuse_point(std::span<const Real> samples, int K, int C, int r, Real alpha, std::span<const std::uint8_t> valid,
                std::span<Real> out, int* clamped = nullptr);

/// Gradient of fuse_point with respect to every sample, weights included.
void fuse_point_backward(std::span<const Real> samples, int K, int C, int r, Real alpha,
                         std::span<const std::uint8_t> valid, std::span<const Real> grad_out,
                         std::span<Real> grad_samples);

/// Per-point samples of every view's feature map at the point's projection.
struct ViewSamples {
  int K = 0;
  int C = 0;
  std::vector<Real> values;          // n x K x C
  std::vector<std::uint8_t> valid;   // n x K
  std::size_t count() const { return K * C == 0 ? 0 : values.size() / (static_cast<std::size_t>(K) * C); }
};

/// Feature maps are addressed in image space of their camera scaled to the
/// map size. A view is invalid for a point behind it or projecting outside.
std::vector<std::array<Real, 2>> project_to_maps(const std::vector<CameraView>& cams,
                                                 const std::vector<FeatureMap>& maps, std::span<const Vec3> points,
                                                 std::vector<std::uint8_t>& valid);

ViewSamples sample_views(const std::vector<FeatureMap>& maps, std::span<const std::array<Real, 2>> coords,
                         std::span<const std::uint8_t> valid, std::size_t n);

/// Fused features (n x C) for reference view r.
std::vector<Real> fuse_all(const ViewSamples& samples, int r, Real alpha, FusionStats* stats = nullptr);

/// Tape op over n points: samples (n x K x C) -> fused (n x C).
Var fuse_features(Tape& tape, Var samples, int K, int C, int r, std::vector<std::uint8_t> valid,
                  Real alpha = kFusionAlpha);

G3D_NAMESPACE_END
