#pragma once

#include <span>
#include <vector>

#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

inline constexpr Real kSmapeEps = Real(0.01);

struct LossWeights {
  Real known = 1;
  Real novel = 1;
  Real hed = Real(0.2);
  Real eikonal = Real(0.01);
};

/// Mean of (a - b)^2.
Var mse(Tape& tape, Var a, Var b);

/// Mean of |a - b| / (|a| + |b| + 0.01); the subgradient at a = b is 0.
Var smape(Tape& tape, Var a, Var b);
Real smape_value(std::span<const Real> a, std::span<const Real> b);

/// Images are H x W x 3, masks H x W.
struct KnownViewImages {
  Var denoised;  // denoised high-res render
  Var low;       // low-res render
  Var target;    // G_k
  Var alpha;     // A_k
  Var mask_high; // M_k
  Var mask_low;  // M^_k
};

/// MSE(I, G) + SMAPE(I A, G M) + MSE(I^, G) + SMAPE(I^ A, G M^). With
/// `symmetric_masks` the SMAPE terms become SMAPE(I M, G A) and SMAPE(I^ M^, G A).
Var loss_known(Tape& tape, const KnownViewImages& v, bool symmetric_masks = false);

/// MSE(I, I^) + SMAPE(I M^, I^ M). With `symmetric_masks`: SMAPE(I M, I^ M^).
Var loss_novel(Tape& tape, Var high, Var low, Var mask_high, Var mask_low, bool symmetric_masks = false);

/// Sum over the boundary maps of MSE(map, target).
Var loss_hed(Tape& tape, const std::vector<Var>& maps, Var target);

/// Eikonal penalty mean (|grad s| - 1)^2 from a forward-mode buffer with four
/// n x width blocks (value, d/dx, d/dy, d/dz); the SDF is column `column`.
Var loss_eikonal(Tape& tape, Var jvp, int width, int column = 0);

/// Constant jvp buffer of the identity map at the given points (n x 3).
std::vector<Real> identity_jvp(std::span<const Real> points);

struct LossParts {
  Var known, novel, hed, eikonal;
};

/// lambda-weighted sum of the four parts. Non-finite parts throw kNonFinite.
Var total_loss(Tape& tape, const LossParts& parts, const LossWeights& w);

/// (1 + omega) eps_cond - omega eps_uncond.
std::vector<Real> cfg_combine(std::span<const Real> eps_cond, std::span<const Real> eps_uncond, Real omega);

G3D_NAMESPACE_END
