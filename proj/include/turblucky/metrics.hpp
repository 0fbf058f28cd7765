#pragma once

#include <span>

#include "turblucky/image.hpp"

namespace turblucky {

// 10 log10(1 / MSE) over all channels; +infinity when the images are identical.
double psnr(const Image& pred, const Image& gt);

// Mean SSIM over valid 11x11 Gaussian (sigma 1.5) windows on luminance,
// K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim(const Image& pred, const Image& gt);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided, Student-t with n - 2 dof
  std::size_t n = 0;
};

// Throws NumericError when either input has zero variance.
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace turblucky
