#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

// Elementwise and reshaping primitives shared by the heavier modules.

Var add(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, Real s);
/// a * s + b, elementwise.
Var scale_shift(Tape& tape, Var a, Real s, Real b);
Var sum(Tape& tape, Var a);
Var mean(Tape& tape, Var a);

/// sum_i weights[i] * scalars[i]; every scalar Var must have size 1.
Var linear_combination(Tape& tape, const std::vector<Var>& scalars, const std::vector<Real>& weights);

/// Columns [begin, begin+count) of a row-major matrix with `stride` columns.
Var columns(Tape& tape, Var a, int stride, int begin, int count);

/// s * tanh(a), elementwise.
Var tanh_scale(Tape& tape, Var a, Real s);

/// Multiplies every channel of a (n x channels) buffer by a per-row weight (n x 1).
Var mul_rows(Tape& tape, Var a, Var row_weights, int channels);

/// Forward value replaced by `values`, gradient passed through unchanged.
Var substitute(Tape& tape, Var a, std::vector<Real> values);

/// Rows `rows` of a (n x channels) buffer.
Var gather_rows(Tape& tape, Var a, std::shared_ptr<const std::vector<std::uint32_t>> rows, int channels);

/// Copy of `base` (n x channels) with the listed rows replaced by `values`
/// (rows.size() x channels). Only `values` receives gradient.
Var scatter_rows(Tape& tape, std::vector<Real> base, std::shared_ptr<const std::vector<std::uint32_t>> rows,
                 Var values, int channels);

G3D_NAMESPACE_END
