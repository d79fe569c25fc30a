#pragma once

#include "convdiff/image.hpp"

namespace convdiff {

inline constexpr double kPsnrCapDb = 100.0;

/// Mean squared error over every sample of every channel.
double mse(const Image& a, const Image& b);

/// 10 log10(peak^2 / mse), or kPsnrCapDb for identical images.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean SSIM over all fully contained 11x11 windows (Gaussian weights,
/// sigma 1.5, K1 = 0.01, K2 = 0.03). Channels are scored separately and
/// averaged. Both sides must be at least 11.
double ssim(const Image& a, const Image& b, double peak = 1.0);

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
};

MetricReport evaluate(const Image& a, const Image& b, double peak = 1.0);

}  // namespace convdiff
