#pragma once

#include <complex>
#include <cstddef>

namespace convdiff::detail {

enum class FftDirection { kForward, kInverse };

// Unnormalized out-of-place 2-D complex DFT of a row-major rows x cols array.
// Safe to call concurrently; plans are cached per shape and direction.
void dft2(const std::complex<double>* in, std::complex<double>* out, std::size_t rows, std::size_t cols,
          FftDirection direction);

}  // namespace convdiff::detail
