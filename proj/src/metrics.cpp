#include "convdiff/metrics.hpp"

#include <array>
#include <cmath>
#include <string>

#include "convdiff/errors.hpp"

namespace convdiff {

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  double sum = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const auto& pa = a.plane(c);
    const auto& pb = b.plane(c);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = pa[i] - pb[i];
      sum += d * d;
    }
  }
  return sum / static_cast<double>(a.sample_count());
}

namespace {

void require_peak(double peak) {
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw InvalidInputError("peak must be positive and finite, got " + std::to_string(peak));
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  require_peak(peak);
  const double err = mse(a, b);
  if (err == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / err));
}

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable 'valid' filtering: output is (rows-10) x (cols-10).
RealGrid filter_valid(const RealGrid& g, const std::array<double, kWindow>& w) {
  const std::size_t out_rows = g.rows() - kWindow + 1;
  const std::size_t out_cols = g.cols() - kWindow + 1;
  RealGrid horizontal(g.rows(), out_cols);
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += w[k] * g(r, c + k);
      horizontal(r, c) = acc;
    }
  RealGrid out(out_rows, out_cols);
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += w[k] * horizontal(r + k, c);
      out(r, c) = acc;
    }
  return out;
}

RealGrid product(const RealGrid& a, const RealGrid& b) {
  RealGrid out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double ssim_plane(const RealGrid& x, const RealGrid& y, double peak) {
  const auto w = gaussian_window();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  const RealGrid mu_x = filter_valid(x, w);
  const RealGrid mu_y = filter_valid(y, w);
  const RealGrid xx = filter_valid(product(x, x), w);
  const RealGrid yy = filter_valid(product(y, y), w);
  const RealGrid xy = filter_valid(product(x, y), w);

  double sum = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i];
    const double my = mu_y[i];
    const double var_x = xx[i] - mx * mx;
    const double var_y = yy[i] - my * my;
    const double cov = xy[i] - mx * my;
    sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (var_x + var_y + c2));
  }
  return sum / static_cast<double>(mu_x.size());
}

}  // namespace

double ssim(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "ssim");
  require_peak(peak);
  if (a.height() < kWindow || a.width() < kWindow)
    throw InvalidInputError("ssim needs images of at least 11x11");
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) total += ssim_plane(a.plane(c), b.plane(c), peak);
  return total / static_cast<double>(a.channels());
}

MetricReport evaluate(const Image& a, const Image& b, double peak) {
  return MetricReport{psnr(a, b, peak), ssim(a, b, peak), mse(a, b)};
}

}  // namespace convdiff
