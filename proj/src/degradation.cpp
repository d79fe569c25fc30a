#include "convdiff/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "convdiff/errors.hpp"
#include "convdiff/spectral.hpp"

namespace convdiff {

DegradationStrength DegradationStrength::from_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw InvalidInputError("degradation strength must lie in [0,1], got " + std::to_string(beta));
  return DegradationStrength(beta);
}

DegradationStrength DegradationStrength::from_step(std::size_t t, std::size_t n) {
  if (n == 0) throw InvalidInputError("trajectory needs at least one step");
  if (t > n) throw InvalidInputError("step " + std::to_string(t) + " exceeds " + std::to_string(n));
  DegradationStrength s(static_cast<double>(t) / static_cast<double>(n));
  s.step_ = t;
  s.total_ = n;
  return s;
}

TransferFunction fractional_power(const TransferFunction& h, DegradationStrength strength, double magnitude_floor) {
  const double beta = strength.beta();
  TransferFunction out(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double mag = std::abs(h[i]);
    if (beta == 0.0) {
      out[i] = 1.0;
    } else if (mag < magnitude_floor) {
      out[i] = 0.0;
    } else if (beta == 1.0) {
      out[i] = h[i];
    } else {
      out[i] = std::polar(std::pow(mag, beta), std::arg(h[i]) * beta);
    }
  }
  if (!h.empty() && std::abs(h[0] - 1.0) <= 1e-6) out[0] = 1.0;
  return out;
}

Image apply_transfer(const Image& img, const TransferFunction& h) {
  img.validate();
  if (h.rows() != img.height() || h.cols() != img.width())
    throw InvalidInputError("transfer is " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()) +
                            " but image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
  std::vector<RealGrid> planes;
  planes.reserve(img.channels());
  for (const auto& p : img.planes()) {
    TransferFunction spectrum = fft2(p);
    for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= h[i];
    planes.push_back(ifft2(spectrum).real);
  }
  return Image(std::move(planes));
}

Image degrade_unclamped(const Image& x0, const TransferFunction& h, DegradationStrength beta) {
  if (beta.beta() == 0.0) {
    x0.validate();
    if (h.rows() != x0.height() || h.cols() != x0.width())
      throw InvalidInputError("transfer dimensions do not match the image");
    return x0;
  }
  return apply_transfer(x0, fractional_power(h, beta));
}

Image degrade(const Image& x0, const TransferFunction& h, DegradationStrength beta) {
  return degrade_unclamped(x0, h, beta).clamped();
}

std::vector<Image> trajectory(const Image& x0, const TransferFunction& h, std::size_t n) {
  if (n == 0) throw InvalidInputError("trajectory needs at least one step");
  std::vector<Image> out;
  out.reserve(n + 1);
  for (std::size_t t = 0; t <= n; ++t) out.push_back(degrade(x0, h, DegradationStrength::from_step(t, n)));
  return out;
}

KernelValidityReport validate_kernel(const TransferFunction& tf, std::size_t support,
                                     const ValidityTolerances& tolerances) {
  const KernelExtraction window = transfer_to_kernel(tf, support);
  const TransferFunction spatial = ifft2_complex(tf);

  KernelValidityReport report;
  for (const Complex& v : spatial) {
    report.max_negative_tap = std::max(report.max_negative_tap, -v.real());
    report.imag_residue = std::max(report.imag_residue, std::abs(v.imag()));
  }
  report.dc_gain_error = std::abs(tf[0] - 1.0);
  report.tail_mass = window.discarded_mass;
  report.is_valid = report.max_negative_tap <= tolerances.max_negative_tap &&
                    report.imag_residue <= tolerances.imag_residue &&
                    report.dc_gain_error <= tolerances.dc_gain_error && report.tail_mass <= tolerances.tail_mass;
  return report;
}

double high_frequency_energy(const Image& img) {
  double energy = 0.0;
  const auto rows = static_cast<long>(img.height());
  const auto cols = static_cast<long>(img.width());
  for (const auto& spectrum : fft2(img)) {
    for (std::size_t r = 0; r < img.height(); ++r)
      for (std::size_t c = 0; c < img.width(); ++c) {
        const long fr = std::labs(signed_frequency(r, img.height()));
        const long fc = std::labs(signed_frequency(c, img.width()));
        if (4 * fr >= rows || 4 * fc >= cols) energy += std::norm(spectrum(r, c));
      }
  }
  return energy;
}

}  // namespace convdiff
