#pragma once

#include <cstdint>
#include <vector>

#include "convdiff/grid.hpp"
#include "convdiff/image.hpp"

namespace convdiff {

struct WienerConfig {
  /// Scalar regularizer S in Y X* / (|X|^2 + S).
  double regularization = 1e-8;
  /// Pin the DC bin to 1 when the raw estimate is within 10% of it.
  bool dc_renormalize = true;

  void validate() const;
  /// Bins with |X|^2 below this carry no reliable information.
  double excitation_threshold() const { return 1e4 * regularization; }
};

enum class DcStatus {
  kUntouched,      ///< renormalization disabled
  kRenormalized,   ///< DC pinned to exactly 1
  kOutOfRange,     ///< raw DC more than 10% away from 1; left as computed
};

struct KernelEstimate {
  TransferFunction transfer;
  /// 1 where |X|^2 >= excitation_threshold.
  Grid<std::uint8_t> excited;
  DcStatus dc_status = DcStatus::kUntouched;

  double excited_fraction() const;
};

/// Pins tf(0,0) to 1 when it lies within 10% of 1. Idempotent.
DcStatus renormalize_dc(TransferFunction& tf);

/// Per bin (Y X*) / (|X|^2 + S).
KernelEstimate wiener_estimate(const TransferFunction& x, const TransferFunction& y, const WienerConfig& cfg = {});

/// ITU-R BT.601 luma for three-channel images; the plane itself for one channel.
RealGrid luminance(const Image& img);

/// wiener_estimate on the luminance planes of a sharp/blurred pair.
KernelEstimate estimate_from_images(const Image& x_sharp, const Image& y_blurred, const WienerConfig& cfg = {});

}  // namespace convdiff
