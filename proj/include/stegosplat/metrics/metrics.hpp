#pragma once

#include "stegosplat/core/image.hpp"

namespace stegosplat::metrics {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Peak signal-to-noise ratio for MAX = 1; capped at 99 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM, Gaussian 11x11 window (sigma 1.5), L = 1, averaged over
/// channels and over every window position fully inside the image.
double ssim(const Image& a, const Image& b);

struct SsimGradient {
  double value = 0.0;
  Image grad;  // d ssim / d a
};

/// SSIM together with its gradient with respect to the first argument.
SsimGradient ssim_with_gradient(const Image& a, const Image& b);

MetricReport compare(const Image& a, const Image& b);

}  // namespace stegosplat::metrics
