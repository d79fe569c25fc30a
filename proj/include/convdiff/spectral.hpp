#pragma once

#include <cstddef>
#include <vector>

#include "convdiff/grid.hpp"
#include "convdiff/image.hpp"
#include "convdiff/kernel.hpp"

namespace convdiff {

// Conventions: forward DFT is unnormalized, inverse carries 1/(rows*cols).
// Kernels are embedded with their center tap at (0,0) and the remaining taps
// wrapped periodically, so symmetric kernels have real, zero-phase transfers.
// All convolution in this library is circular.

/// Forward 2-D DFT of a real plane. Throws on empty or non-finite input.
TransferFunction fft2(const RealGrid& plane);

/// Forward 2-D DFT of each channel.
std::vector<TransferFunction> fft2(const Image& img);

/// Forward 2-D DFT of a complex grid.
TransferFunction fft2(const TransferFunction& grid);

/// Full complex inverse DFT including the 1/(rows*cols) factor.
TransferFunction ifft2_complex(const TransferFunction& tf);

struct InverseTransform {
  RealGrid real;
  /// Largest |imag| discarded when taking the real part.
  double max_imag_residue = 0.0;
};

/// Real part of the inverse DFT plus the discarded imaginary residue.
InverseTransform ifft2(const TransferFunction& tf);

/// Inverse of fft2(Image): one transfer per channel, real parts only.
Image ifft2(const std::vector<TransferFunction>& spectra);

TransferFunction kernel_to_transfer(const Kernel& k, std::size_t height, std::size_t width);

/// Spatial window pulled back out of a transfer function.
struct KernelExtraction {
  std::size_t size = 0;
  /// Row-major, center tap in the middle.
  std::vector<double> taps;
  /// Sum of |sample| over the grid outside the window.
  double discarded_mass = 0.0;
  double imag_residue = 0.0;

  double tap_sum() const;

  /// Clips negative taps to zero and renormalizes to unit sum, producing a
  /// Kernel that satisfies its invariants. Throws if nothing positive remains.
  Kernel project() const;
};

/// Wrap-aware extraction of the size x size window centered at (0,0).
KernelExtraction transfer_to_kernel(const TransferFunction& tf, std::size_t size);

/// Circularly shifted copy moving (0,0) to (rows/2, cols/2).
template <typename T>
Grid<T> fftshift(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  const std::size_t sr = g.rows() / 2;
  const std::size_t sc = g.cols() / 2;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) out((r + sr) % g.rows(), (c + sc) % g.cols()) = g(r, c);
  return out;
}

/// log(1+|F|), DC-centered, min-max normalized into [0,1].
RealGrid log_magnitude_spectrum(const RealGrid& plane);
Image log_magnitude_spectrum(const Image& img);

/// Signed frequency of DFT bin i on an axis of length n, in (-n/2, n/2].
inline long signed_frequency(std::size_t i, std::size_t n) {
  const long li = static_cast<long>(i);
  const long ln = static_cast<long>(n);
  return li <= ln / 2 ? li : li - ln;
}

}  // namespace convdiff
