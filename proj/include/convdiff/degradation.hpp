#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "convdiff/grid.hpp"
#include "convdiff/image.hpp"

namespace convdiff {

/// Position beta in [0,1] along the blur trajectory; optionally the step t of n
/// that produced it (beta = t/n).
class DegradationStrength {
 public:
  /// Throws InvalidInputError outside [0,1].
  static DegradationStrength from_beta(double beta);
  /// Throws unless n >= 1 and t <= n.
  static DegradationStrength from_step(std::size_t t, std::size_t n);

  double beta() const noexcept { return beta_; }
  std::optional<std::size_t> step() const noexcept { return step_; }
  std::optional<std::size_t> total_steps() const noexcept { return total_; }

 private:
  explicit DegradationStrength(double beta) : beta_(beta) {}
  double beta_;
  std::optional<std::size_t> step_;
  std::optional<std::size_t> total_;
};

/// Bins with |H| below this map to 0 for beta > 0 (and to 1 for beta = 0).
inline constexpr double kMagnitudeFloor = 1e-12;

/// Per bin |H|^beta * exp(j*phi*beta) with phi the principal phase in (-pi, pi].
/// The DC bin is pinned to exactly 1 when the input DC is within 1e-6 of 1.
TransferFunction fractional_power(const TransferFunction& h, DegradationStrength beta,
                                  double magnitude_floor = kMagnitudeFloor);

/// Multiplies every channel spectrum by `h` and returns the real part, unclamped.
Image apply_transfer(const Image& img, const TransferFunction& h);

/// x_beta = F^-1{ F{x0} . H^beta } without clamping. Use this for chaining.
Image degrade_unclamped(const Image& x0, const TransferFunction& h, DegradationStrength beta);

/// degrade_unclamped clamped to [0,1].
Image degrade(const Image& x0, const TransferFunction& h, DegradationStrength beta);

/// [degrade(x0, h, t/n) for t = 0..n].
std::vector<Image> trajectory(const Image& x0, const TransferFunction& h, std::size_t n);

struct ValidityTolerances {
  double max_negative_tap = 1e-4;
  double imag_residue = 1e-6;
  double dc_gain_error = 1e-4;
  double tail_mass = 1e-3;
};

/// Whether a transfer function corresponds to a physical blur kernel: real,
/// non-negative, unit-sum and confined to the declared support.
struct KernelValidityReport {
  double max_negative_tap = 0.0;  ///< max(0, -min spatial sample)
  double imag_residue = 0.0;      ///< max |imag| of the spatial counterpart
  double dc_gain_error = 0.0;     ///< |H(0,0) - 1|
  double tail_mass = 0.0;         ///< sum |sample| outside the support window
  bool is_valid = false;
};

KernelValidityReport validate_kernel(const TransferFunction& tf, std::size_t support,
                                     const ValidityTolerances& tolerances = {});

/// Sum of |F{x}|^2 over bins outside the centered low-frequency half band,
/// i.e. bins with |k_row| >= rows/4 or |k_col| >= cols/4. Summed over channels.
double high_frequency_energy(const Image& img);

}  // namespace convdiff
