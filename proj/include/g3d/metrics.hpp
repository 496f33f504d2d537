#pragma once

#include "g3d/image_io.hpp"

G3D_NAMESPACE_BEGIN

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2 for data in [0, 1]. The SSIM map is averaged over
/// pixels whose window fits inside the image, then over channels.
double ssim(const Image& a, const Image& b);

double psnr(const Image& a, const Image& b);

G3D_NAMESPACE_END
