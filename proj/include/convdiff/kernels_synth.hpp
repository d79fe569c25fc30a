#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "convdiff/image.hpp"
#include "convdiff/kernel.hpp"

namespace convdiff {

/// Isotropic Gaussian blur. Default support is the 15x15 window used for the
/// synthetic DIV2K-style degradation.
struct GaussianSpec {
  static constexpr std::size_t kDefaultSize = 15;
  static constexpr double kMinSigma = 2.0;
  static constexpr double kMaxSigma = 4.0;

  std::size_t size = kDefaultSize;
  double sigma = 2.0;

  /// Support of 2*ceil(8*sigma)+1 taps. The discarded tail is below 1e-13 so
  /// the transfer stays strictly positive and the kernel is Gaussian for all
  /// practical purposes; 15x15 truncation is not (see README).
  static GaussianSpec full_support(double sigma);

  /// Throws InvalidInputError for an even size or non-positive sigma.
  void validate() const;
};

/// Taps proportional to exp(-(i^2+j^2)/(2 sigma^2)) on the centered integer
/// grid, normalized to unit sum after truncation.
Kernel make_gaussian_kernel(const GaussianSpec& spec);

enum class TestImageKind { kBroadband, kCheckerboard, kImpulse, kConstant, kBandLimited };

TestImageKind parse_test_image_kind(std::string_view name);
std::string_view to_string(TestImageKind kind);

/// Annulus of radial frequency (cycles/pixel) zeroed by kBandLimited.
struct FrequencyBand {
  double inner;
  double outer;
  bool contains(double radial_frequency) const { return radial_frequency >= inner && radial_frequency < outer; }
};
inline constexpr FrequencyBand kBandLimitedAnnulus{0.20, 0.30};

/// Radial frequency in cycles/pixel of DFT bin (r, c).
double radial_frequency(std::size_t r, std::size_t c, std::size_t rows, std::size_t cols);

/// Deterministic synthetic imagery standing in for DIV2K crops.
///
/// - broadband: multi-octave smoothed uniform noise plus a white component,
///   affinely mapped into [0,1]; every DFT bin is excited.
/// - checkerboard: binary 0/1 cells of side 4.
/// - impulse: single 1 at (0,0).
/// - constant: 0.5 everywhere.
/// - band_limited: broadband with kBandLimitedAnnulus zeroed, then mapped into [0,1].
///
/// Dimensions must be at least 16.
Image make_test_image(TestImageKind kind, std::size_t height, std::size_t width, std::uint64_t seed,
                      std::size_t channels = 1);

}  // namespace convdiff
