#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace convdiff {

/// Small odd-sized spatial blur kernel: non-negative taps summing to one.
class Kernel {
 public:
  /// Residue allowed below zero and around unit sum.
  static constexpr double kTolerance = 1e-6;

  /// Validates size, non-negativity and normalization; throws InvalidInputError.
  Kernel(std::size_t size, std::vector<double> taps);

  /// Single unit tap.
  static Kernel delta(std::size_t size = 1);

  std::size_t size() const noexcept { return size_; }
  int radius() const noexcept { return static_cast<int>(size_ / 2); }
  std::span<const double> taps() const noexcept { return taps_; }

  /// Tap at offset (dy, dx) from the center, both in [-radius, radius].
  double at(int dy, int dx) const {
    return taps_[static_cast<std::size_t>(dy + radius()) * size_ + static_cast<std::size_t>(dx + radius())];
  }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  std::size_t size_;
  std::vector<double> taps_;
};

}  // namespace convdiff
