#pragma once

#include <span>
#include <vector>

#include "g3d/tape.hpp"

G3D_NAMESPACE_BEGIN

/// Response of the proxy to a unit step edge before normalization:
/// 4 (g(0) + g(1)) for the normalized 5-tap Gaussian g with sigma 1.
Real edge_proxy_normalizer();

/// Deterministic boundary map: luminance (0.299, 0.587, 0.114) for RGB input,
/// 5x5 Gaussian blur (sigma 1), Sobel gradient magnitude, divided by the unit
/// step response and clamped to [0, 1]. Borders are clamped. channels is 1 or 3.
std::vector<Real> edge_proxy(std::span<const Real> image, int width, int height, int channels);

/// Tape op version of edge_proxy (H x W output).
Var edge_proxy(Tape& tape, Var image, int width, int height, int channels);

G3D_NAMESPACE_END
