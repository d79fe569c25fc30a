#include "convdiff/kernels_synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "convdiff/errors.hpp"
#include "convdiff/spectral.hpp"

namespace convdiff {

GaussianSpec GaussianSpec::full_support(double sigma) {
  return GaussianSpec{2 * static_cast<std::size_t>(std::ceil(8.0 * sigma)) + 1, sigma};
}

void GaussianSpec::validate() const {
  if (size == 0 || size % 2 == 0) throw InvalidInputError("gaussian size must be odd, got " + std::to_string(size));
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidInputError("gaussian sigma must be positive, got " + std::to_string(sigma));
}

Kernel make_gaussian_kernel(const GaussianSpec& spec) {
  spec.validate();
  const int r = static_cast<int>(spec.size / 2);
  const double two_var = 2.0 * spec.sigma * spec.sigma;
  std::vector<double> taps(spec.size * spec.size);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      const double v = std::exp(-static_cast<double>(i * i + j * j) / two_var);
      taps[static_cast<std::size_t>(i + r) * spec.size + static_cast<std::size_t>(j + r)] = v;
      sum += v;
    }
  for (double& t : taps) t /= sum;
  return Kernel(spec.size, std::move(taps));
}

TestImageKind parse_test_image_kind(std::string_view name) {
  if (name == "broadband") return TestImageKind::kBroadband;
  if (name == "checkerboard") return TestImageKind::kCheckerboard;
  if (name == "impulse") return TestImageKind::kImpulse;
  if (name == "constant") return TestImageKind::kConstant;
  if (name == "band_limited" || name == "band-limited") return TestImageKind::kBandLimited;
  throw InvalidInputError("unknown test image kind '" + std::string(name) + "'");
}

std::string_view to_string(TestImageKind kind) {
  switch (kind) {
    case TestImageKind::kBroadband: return "broadband";
    case TestImageKind::kCheckerboard: return "checkerboard";
    case TestImageKind::kImpulse: return "impulse";
    case TestImageKind::kConstant: return "constant";
    case TestImageKind::kBandLimited: return "band_limited";
  }
  return "unknown";
}

double radial_frequency(std::size_t r, std::size_t c, std::size_t rows, std::size_t cols) {
  const double fy = static_cast<double>(signed_frequency(r, rows)) / static_cast<double>(rows);
  const double fx = static_cast<double>(signed_frequency(c, cols)) / static_cast<double>(cols);
  return std::hypot(fy, fx);
}

namespace {

// Uniform [0,1) from the top 53 bits; avoids the implementation-defined
// std::uniform_real_distribution so images are identical across toolchains.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

RealGrid uniform_noise(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  RealGrid g(h, w);
  for (double& v : g) v = unit_uniform(rng);
  return g;
}

RealGrid circular_blur(const RealGrid& g, double sigma) {
  GaussianSpec spec = GaussianSpec::full_support(sigma);
  const std::size_t side = std::min(g.rows(), g.cols());
  spec.size = std::min(spec.size, side % 2 == 1 ? side : side - 1);
  TransferFunction spectrum = fft2(g);
  const TransferFunction h = kernel_to_transfer(make_gaussian_kernel(spec), g.rows(), g.cols());
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= h[i];
  return ifft2(spectrum).real;
}

void normalize_unit_range(RealGrid& g) {
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  const double low = *lo;
  const double span = *hi - *lo;
  for (double& v : g) v = span > 0.0 ? (v - low) / span : 0.5;
}

RealGrid broadband_plane(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  // Roughly 1/f: octaves of smoothed noise with halving weights on top of a
  // white floor that keeps every bin excited.
  RealGrid acc = uniform_noise(h, w, rng);
  for (double& v : acc) v *= 0.35;
  double weight = 1.0;
  for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
    const RealGrid layer = circular_blur(uniform_noise(h, w, rng), sigma);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * layer[i] * sigma;
    weight *= 0.8;
  }
  normalize_unit_range(acc);
  return acc;
}

RealGrid band_limited_plane(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  TransferFunction spectrum = fft2(broadband_plane(h, w, rng));
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      if (kBandLimitedAnnulus.contains(radial_frequency(r, c, h, w))) spectrum(r, c) = 0.0;
  RealGrid plane = ifft2(spectrum).real;
  // Affine rescale touches only the DC bin, so the annulus stays empty.
  normalize_unit_range(plane);
  return plane;
}

}  // namespace

Image make_test_image(TestImageKind kind, std::size_t height, std::size_t width, std::uint64_t seed,
                      std::size_t channels) {
  if (height < 16 || width < 16)
    throw InvalidInputError("test images must be at least 16x16, got " + std::to_string(height) + "x" +
                            std::to_string(width));
  if (channels != 1 && channels != 3) throw InvalidInputError("test images have 1 or 3 channels");

  std::mt19937_64 rng(seed);
  std::vector<RealGrid> planes;
  for (std::size_t c = 0; c < channels; ++c) {
    RealGrid p(height, width);
    switch (kind) {
      case TestImageKind::kBroadband: p = broadband_plane(height, width, rng); break;
      case TestImageKind::kBandLimited: p = band_limited_plane(height, width, rng); break;
      case TestImageKind::kCheckerboard:
        for (std::size_t r = 0; r < height; ++r)
          for (std::size_t col = 0; col < width; ++col) p(r, col) = ((r / 4 + col / 4) % 2 == 0) ? 1.0 : 0.0;
        break;
      case TestImageKind::kImpulse: p(0, 0) = 1.0; break;
      case TestImageKind::kConstant:
        for (double& v : p) v = 0.5;
        break;
    }
    planes.push_back(std::move(p));
  }
  return Image(std::move(planes));
}

}  // namespace convdiff
