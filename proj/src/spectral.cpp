#include "convdiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "convdiff/errors.hpp"
#include "fft_backend.hpp"

namespace convdiff {

// ---- Image -----------------------------------------------------------------

Image::Image(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), planes_(channels, RealGrid(height, width, fill)) {
  validate();
}

Image::Image(RealGrid plane) : Image(std::vector<RealGrid>{std::move(plane)}) {}

Image::Image(std::vector<RealGrid> planes) : planes_(std::move(planes)) {
  if (!planes_.empty()) {
    height_ = planes_.front().rows();
    width_ = planes_.front().cols();
  }
  for (const auto& p : planes_) {
    if (p.rows() != height_ || p.cols() != width_)
      throw InvalidInputError("image planes have mismatched dimensions");
  }
  validate();
}

bool Image::same_shape(const Image& other) const noexcept {
  return height_ == other.height_ && width_ == other.width_ && channels() == other.channels();
}

double Image::mean() const {
  double sum = 0.0;
  for (const auto& p : planes_)
    for (double v : p) sum += v;
  return sample_count() == 0 ? 0.0 : sum / static_cast<double>(sample_count());
}

bool Image::all_finite() const {
  for (const auto& p : planes_)
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

void Image::validate() const {
  if (channels() != 1 && channels() != 3)
    throw InvalidInputError("image must have 1 or 3 channels, got " + std::to_string(channels()));
  if (height_ < kMinSide || width_ < kMinSide)
    throw InvalidInputError("image must be at least " + std::to_string(kMinSide) + "x" +
                            std::to_string(kMinSide) + ", got " + std::to_string(height_) + "x" +
                            std::to_string(width_));
  if (!all_finite()) throw InvalidInputError("image contains non-finite samples");
}

Image Image::clamped() const {
  Image out = *this;
  for (auto& p : out.planes_)
    for (double& v : p) v = std::clamp(v, 0.0, 1.0);
  return out;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw InvalidInputError(std::string(what) + ": dimension mismatch (" + std::to_string(a.height()) + "x" +
                            std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                            std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                            std::to_string(b.channels()) + ")");
}

// ---- Kernel ----------------------------------------------------------------

Kernel::Kernel(std::size_t size, std::vector<double> taps) : size_(size), taps_(std::move(taps)) {
  if (size_ == 0 || size_ % 2 == 0)
    throw InvalidInputError("kernel size must be odd, got " + std::to_string(size_));
  if (taps_.size() != size_ * size_)
    throw InvalidInputError("kernel of size " + std::to_string(size_) + " needs " +
                            std::to_string(size_ * size_) + " taps, got " + std::to_string(taps_.size()));
  double sum = 0.0;
  for (double t : taps_) {
    if (!std::isfinite(t)) throw InvalidInputError("kernel tap is not finite");
    if (t < -kTolerance) throw InvalidInputError("kernel tap is negative: " + std::to_string(t));
    sum += t;
  }
  if (std::abs(sum - 1.0) > kTolerance)
    throw InvalidInputError("kernel taps must sum to 1, got " + std::to_string(sum));
}

Kernel Kernel::delta(std::size_t size) {
  std::vector<double> taps(size * size, 0.0);
  if (size % 2 == 1) taps[taps.size() / 2] = 1.0;
  return Kernel(size, std::move(taps));
}

// ---- Transforms ------------------------------------------------------------

namespace {

void require_nonempty(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InvalidInputError("transform dimensions must be positive");
}

}  // namespace

TransferFunction fft2(const TransferFunction& grid) {
  require_nonempty(grid.rows(), grid.cols());
  for (const Complex& v : grid)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidInputError("fft2: non-finite sample");
  TransferFunction out(grid.rows(), grid.cols());
  detail::dft2(grid.values().data(), out.values().data(), grid.rows(), grid.cols(),
               detail::FftDirection::kForward);
  return out;
}

TransferFunction fft2(const RealGrid& plane) {
  require_nonempty(plane.rows(), plane.cols());
  TransferFunction in(plane.rows(), plane.cols());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (!std::isfinite(plane[i])) throw InvalidInputError("fft2: non-finite sample");
    in[i] = plane[i];
  }
  TransferFunction out(plane.rows(), plane.cols());
  detail::dft2(in.values().data(), out.values().data(), in.rows(), in.cols(), detail::FftDirection::kForward);
  return out;
}

std::vector<TransferFunction> fft2(const Image& img) {
  img.validate();
  std::vector<TransferFunction> out;
  out.reserve(img.channels());
  for (const auto& p : img.planes()) out.push_back(fft2(p));
  return out;
}

TransferFunction ifft2_complex(const TransferFunction& tf) {
  require_nonempty(tf.rows(), tf.cols());
  TransferFunction out(tf.rows(), tf.cols());
  detail::dft2(tf.values().data(), out.values().data(), tf.rows(), tf.cols(), detail::FftDirection::kInverse);
  const double scale = 1.0 / static_cast<double>(tf.size());
  for (Complex& v : out) v *= scale;
  return out;
}

InverseTransform ifft2(const TransferFunction& tf) {
  const TransferFunction full = ifft2_complex(tf);
  InverseTransform result{RealGrid(tf.rows(), tf.cols()), 0.0};
  for (std::size_t i = 0; i < full.size(); ++i) {
    result.real[i] = full[i].real();
    result.max_imag_residue = std::max(result.max_imag_residue, std::abs(full[i].imag()));
  }
  return result;
}

Image ifft2(const std::vector<TransferFunction>& spectra) {
  std::vector<RealGrid> planes;
  planes.reserve(spectra.size());
  for (const auto& s : spectra) planes.push_back(ifft2(s).real);
  return Image(std::move(planes));
}

TransferFunction kernel_to_transfer(const Kernel& k, std::size_t height, std::size_t width) {
  require_nonempty(height, width);
  if (k.size() > std::min(height, width))
    throw InvalidInputError("kernel of size " + std::to_string(k.size()) + " does not fit a " +
                            std::to_string(height) + "x" + std::to_string(width) + " grid");
  const long h = static_cast<long>(height);
  const long w = static_cast<long>(width);
  const int r = k.radius();
  TransferFunction embedded(height, width);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const auto row = static_cast<std::size_t>((dy + h) % h);
      const auto col = static_cast<std::size_t>((dx + w) % w);
      embedded(row, col) += k.at(dy, dx);
    }
  return fft2(embedded);
}

double KernelExtraction::tap_sum() const {
  double sum = 0.0;
  for (double t : taps) sum += t;
  return sum;
}

Kernel KernelExtraction::project() const {
  std::vector<double> clipped(taps.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    clipped[i] = std::max(taps[i], 0.0);
    sum += clipped[i];
  }
  if (!(sum > 0.0)) throw InvalidInputError("extracted kernel has no positive mass");
  for (double& t : clipped) t /= sum;
  return Kernel(size, std::move(clipped));
}

KernelExtraction transfer_to_kernel(const TransferFunction& tf, std::size_t size) {
  if (size == 0 || size % 2 == 0) throw InvalidInputError("kernel size must be odd");
  if (size > std::min(tf.rows(), tf.cols()))
    throw InvalidInputError("kernel size " + std::to_string(size) + " exceeds the transfer grid");

  const InverseTransform spatial = ifft2(tf);
  const long h = static_cast<long>(tf.rows());
  const long w = static_cast<long>(tf.cols());
  const int r = static_cast<int>(size / 2);

  KernelExtraction out;
  out.size = size;
  out.imag_residue = spatial.max_imag_residue;
  out.taps.resize(size * size);

  double total = 0.0;
  for (double v : spatial.real) total += std::abs(v);
  double inside = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double v =
          spatial.real(static_cast<std::size_t>((dy + h) % h), static_cast<std::size_t>((dx + w) % w));
      out.taps[static_cast<std::size_t>(dy + r) * size + static_cast<std::size_t>(dx + r)] = v;
      inside += std::abs(v);
    }
  out.discarded_mass = std::max(0.0, total - inside);
  return out;
}

RealGrid log_magnitude_spectrum(const RealGrid& plane) {
  const TransferFunction spectrum = fftshift(fft2(plane));
  RealGrid out(plane.rows(), plane.cols());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    out[i] = std::log1p(std::abs(spectrum[i]));
    lo = std::min(lo, out[i]);
    hi = std::max(hi, out[i]);
  }
  const double span = hi - lo;
  for (double& v : out) v = span > 0.0 ? (v - lo) / span : 0.0;
  return out;
}

Image log_magnitude_spectrum(const Image& img) {
  std::vector<RealGrid> planes;
  planes.reserve(img.channels());
  for (const auto& p : img.planes()) planes.push_back(log_magnitude_spectrum(p));
  return Image(std::move(planes));
}

}  // namespace convdiff
