#pragma once

#include <cstddef>
#include <vector>

#include "convdiff/grid.hpp"

namespace convdiff {

/// Real-valued raster with one or three planar channels.
///
/// Samples are nominally in [0,1] but intermediate results may leave that
/// range; clamping only happens where an operation documents it.
class Image {
 public:
  static constexpr std::size_t kMinSide = 8;

  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels = 1, double fill = 0.0);
  explicit Image(RealGrid plane);
  explicit Image(std::vector<RealGrid> planes);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return planes_.size(); }
  std::size_t sample_count() const noexcept { return height_ * width_ * planes_.size(); }
  bool empty() const noexcept { return planes_.empty(); }

  const RealGrid& plane(std::size_t c) const { return planes_.at(c); }
  RealGrid& plane(std::size_t c) { return planes_.at(c); }
  const std::vector<RealGrid>& planes() const noexcept { return planes_; }

  double& operator()(std::size_t c, std::size_t r, std::size_t col) { return planes_[c](r, col); }
  double operator()(std::size_t c, std::size_t r, std::size_t col) const { return planes_[c](r, col); }

  bool same_shape(const Image& other) const noexcept;
  double mean() const;
  bool all_finite() const;

  /// Throws InvalidInputError unless the image has a valid shape and finite samples.
  void validate() const;

  /// Copy with every sample clamped to [0,1].
  Image clamped() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<RealGrid> planes_;
};

/// Throws InvalidInputError naming `what` if the shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace convdiff
