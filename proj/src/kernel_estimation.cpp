#include "convdiff/kernel_estimation.hpp"

#include <cmath>
#include <string>

#include "convdiff/errors.hpp"
#include "convdiff/spectral.hpp"

namespace convdiff {

void WienerConfig::validate() const {
  if (!(regularization > 0.0) || !std::isfinite(regularization))
    throw InvalidInputError("wiener regularization must be positive and finite, got " +
                            std::to_string(regularization));
}

double KernelEstimate::excited_fraction() const {
  if (excited.empty()) return 0.0;
  std::size_t n = 0;
  for (auto v : excited) n += v;
  return static_cast<double>(n) / static_cast<double>(excited.size());
}

DcStatus renormalize_dc(TransferFunction& tf) {
  if (tf.empty()) return DcStatus::kOutOfRange;
  if (std::abs(tf[0] - 1.0) <= 0.1) {
    tf[0] = 1.0;
    return DcStatus::kRenormalized;
  }
  return DcStatus::kOutOfRange;
}

KernelEstimate wiener_estimate(const TransferFunction& x, const TransferFunction& y, const WienerConfig& cfg) {
  cfg.validate();
  if (!x.same_shape(y))
    throw InvalidInputError("wiener_estimate: spectra differ in shape (" + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) + "x" +
                            std::to_string(y.cols()) + ")");
  KernelEstimate est;
  est.transfer = TransferFunction(x.rows(), x.cols());
  est.excited = Grid<std::uint8_t>(x.rows(), x.cols());
  const double threshold = cfg.excitation_threshold();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double power = std::norm(x[i]);
    est.transfer[i] = y[i] * std::conj(x[i]) / (power + cfg.regularization);
    est.excited[i] = power >= threshold ? 1 : 0;
  }
  if (cfg.dc_renormalize) est.dc_status = renormalize_dc(est.transfer);
  return est;
}

RealGrid luminance(const Image& img) {
  if (img.channels() == 1) return img.plane(0);
  RealGrid out(img.height(), img.width());
  const auto& r = img.plane(0);
  const auto& g = img.plane(1);
  const auto& b = img.plane(2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

KernelEstimate estimate_from_images(const Image& x_sharp, const Image& y_blurred, const WienerConfig& cfg) {
  require_same_shape(x_sharp, y_blurred, "estimate_from_images");
  x_sharp.validate();
  y_blurred.validate();
  return wiener_estimate(fft2(luminance(x_sharp)), fft2(luminance(y_blurred)), cfg);
}

}  // namespace convdiff
