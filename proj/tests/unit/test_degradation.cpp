#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "convdiff/degradation.hpp"
#include "convdiff/errors.hpp"
#include "convdiff/kernel_estimation.hpp"
#include "convdiff/kernels_synth.hpp"
#include "convdiff/spectral.hpp"
#include "oracles.hpp"

using namespace convdiff;
using Catch::Matchers::WithinAbs;

namespace {

TransferFunction gaussian_transfer(double sigma, std::size_t side, bool full = true) {
  const GaussianSpec spec = full ? GaussianSpec::full_support(sigma) : GaussianSpec{15, sigma};
  return kernel_to_transfer(make_gaussian_kernel(spec), side, side);
}

DegradationStrength beta(double b) { return DegradationStrength::from_beta(b); }

}  // namespace

TEST_CASE("DegradationStrength range and step bookkeeping") {
  CHECK_THROWS_AS(DegradationStrength::from_beta(-1e-9), InvalidInputError);
  CHECK_THROWS_AS(DegradationStrength::from_beta(1.0 + 1e-12), InvalidInputError);
  CHECK_THROWS_AS(DegradationStrength::from_beta(std::nan("")), InvalidInputError);
  CHECK(beta(0.3).beta() == 0.3);
  CHECK_FALSE(beta(0.3).step().has_value());
  const auto s = DegradationStrength::from_step(3, 7);
  CHECK(s.beta() == 3.0 / 7.0);
  CHECK(*s.step() == 3);
  CHECK(*s.total_steps() == 7);
  CHECK(DegradationStrength::from_step(0, 4).beta() == 0.0);
  CHECK_THROWS_AS(DegradationStrength::from_step(5, 4), InvalidInputError);
  CHECK_THROWS_AS(DegradationStrength::from_step(0, 0), InvalidInputError);
}

TEST_CASE("fractional_power at the endpoints") {
  const TransferFunction h = gaussian_transfer(2.0, 64, false);
  const TransferFunction one = fractional_power(h, beta(1.0));
  CHECK(oracle::max_abs_diff(one, h) < 1e-12);
  for (const Complex& v : fractional_power(h, beta(0.0))) CHECK(v == Complex(1.0));
}

TEST_CASE("fractional_power uses the principal phase") {
  TransferFunction h(2, 2, 1.0);
  h(0, 1) = -0.25;
  h(1, 0) = Complex(0.0, 0.5);
  const TransferFunction p = fractional_power(h, beta(0.5));
  CHECK(std::abs(p(0, 1) - Complex(0.0, 0.5)) < 1e-15);
  CHECK(std::abs(p(1, 0) - std::polar(std::sqrt(0.5), M_PI / 4)) < 1e-15);
}

TEST_CASE("fractional_power floors tiny magnitudes") {
  TransferFunction h(2, 2, 0.5);
  h[0] = 1.0;
  h(1, 1) = 1e-13;
  CHECK(fractional_power(h, beta(0.5))(1, 1) == Complex(0.0));
  CHECK(fractional_power(h, beta(0.0))(1, 1) == Complex(1.0));
  CHECK(fractional_power(h, beta(0.5), 1e-14)(1, 1) != Complex(0.0));
}

TEST_CASE("fractional_power pins a near-unit DC") {
  TransferFunction h(4, 4, 0.5);
  h[0] = 1.0 + 5e-7;
  CHECK(fractional_power(h, beta(0.3))[0] == Complex(1.0));
  h[0] = 1.0 + 5e-6;
  CHECK(fractional_power(h, beta(0.3))[0] != Complex(1.0));
}

TEST_CASE("sigma 2 at beta 1/4 matches a directly built sigma 1 Gaussian") {
  const auto max_diff_within = [](const TransferFunction& a, const TransferFunction& b, double band) {
    double m = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c)
        if (radial_frequency(r, c, a.rows(), a.cols()) <= band) m = std::max(m, std::abs(a(r, c) - b(r, c)));
    return m;
  };
  SECTION("15x15 kernels") {
    const TransferFunction p = fractional_power(gaussian_transfer(2.0, 128, false), beta(0.25));
    const TransferFunction h1 = gaussian_transfer(1.0, 128, false);
    // Truncation perturbs the small high-frequency values of the sigma 2
    // transfer and the quarter power magnifies that; near Nyquist the
    // transfer also dips below zero and its quarter power turns complex.
    CHECK(max_diff_within(p, h1, 0.2) < 1e-3);
    CHECK(max_diff_within(p, h1, 1.0) < 0.1);
  }
  SECTION("full support kernels") {
    const TransferFunction p = fractional_power(gaussian_transfer(2.0, 128), beta(0.25));
    const TransferFunction h1 = gaussian_transfer(1.0, 128);
    CHECK(max_diff_within(p, h1, 0.4) < 1e-3);
    CHECK(max_diff_within(p, h1, 1.0) < 1e-2);
  }
}

TEST_CASE("exponent additivity on Gaussian transfers") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double sigma : {2.0, 3.0, 4.0}) {
    const TransferFunction h = gaussian_transfer(sigma, 128);
    for (int i = 0; i < 5; ++i) {
      const double a = u(rng), b = u(rng) * (1.0 - a);
      const TransferFunction pa = fractional_power(h, beta(a));
      const TransferFunction pb = fractional_power(h, beta(b));
      const TransferFunction pab = fractional_power(h, beta(a + b));
      double err = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) err = std::max(err, std::abs(pa[k] * pb[k] - pab[k]));
      CHECK(err < 1e-9);
    }
  }
}

TEST_CASE("stronger degradation attenuates every bin at least as much") {
  const TransferFunction h = gaussian_transfer(3.0, 64);
  const double betas[] = {0.0, 0.1, 0.3, 0.55, 0.8, 1.0};
  for (std::size_t i = 0; i + 1 < std::size(betas); ++i) {
    const TransferFunction lo = fractional_power(h, beta(betas[i]));
    const TransferFunction hi = fractional_power(h, beta(betas[i + 1]));
    for (std::size_t k = 0; k < h.size(); ++k) CHECK(std::abs(lo[k]) >= std::abs(hi[k]));
  }
}

TEST_CASE("degrade preserves the mean before clamping") {
  const Image x = make_test_image(TestImageKind::kBroadband, 48, 40, 3, 3);
  const TransferFunction h = kernel_to_transfer(make_gaussian_kernel({15, 3.0}), 48, 40);
  for (double b : {0.0, 0.2, 0.5, 0.77, 1.0}) CHECK_THAT(degrade_unclamped(x, h, beta(b)).mean(), WithinAbs(x.mean(), 1e-6));
}

TEST_CASE("degrade at beta 0 returns the input") {
  const Image x = make_test_image(TestImageKind::kBroadband, 32, 32, 8);
  const TransferFunction h = gaussian_transfer(2.0, 32, false);
  CHECK(oracle::max_abs_diff(degrade(x, h, beta(0.0)), x) < 1e-9);
}

TEST_CASE("degrade at beta 1 equals circular spatial convolution") {
  const Image x = make_test_image(TestImageKind::kBroadband, 40, 36, 5, 3);
  const Kernel k = make_gaussian_kernel({15, 3.0});
  const Image y = degrade(x, kernel_to_transfer(k, 40, 36), beta(1.0));
  CHECK(oracle::max_abs_diff(y, oracle::circular_convolve(x, k)) < 1e-6);
}

TEST_CASE("degrade then continue equals one shot") {
  const Image x = make_test_image(TestImageKind::kBroadband, 128, 128, 2);
  for (double sigma : {2.0, 3.0, 4.0}) {
    const TransferFunction h = gaussian_transfer(sigma, 128);
    const Image half = degrade_unclamped(x, h, beta(0.5));
    const Image chained = apply_transfer(half, fractional_power(h, beta(0.5)));
    CHECK(oracle::max_abs_diff(chained, degrade_unclamped(x, h, beta(1.0))) < 1e-6);
  }
}

TEST_CASE("degrade clamps only at the boundary") {
  TransferFunction sharpen(16, 16, 1.0);
  for (std::size_t k = 1; k < sharpen.size(); ++k) sharpen[k] = 1.5;
  const Image x = make_test_image(TestImageKind::kCheckerboard, 16, 16, 0);
  const Image raw = degrade_unclamped(x, sharpen, beta(1.0));
  const Image clamped = degrade(x, sharpen, beta(1.0));
  double lo = 0.0, hi = 1.0;
  for (double v : raw.plane(0)) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.0);
  CHECK(hi > 1.0);
  CHECK(oracle::max_abs_diff(clamped, raw.clamped()) == 0.0);
}

TEST_CASE("degrade rejects mismatched transfers") {
  const Image x(16, 16);
  CHECK_THROWS_AS(degrade(x, TransferFunction(16, 17, 1.0), beta(0.5)), InvalidInputError);
  CHECK_THROWS_AS(degrade(x, TransferFunction(16, 17, 1.0), beta(0.0)), InvalidInputError);
}

TEST_CASE("validate_kernel accepts a half-power Gaussian") {
  const KernelValidityReport r = validate_kernel(fractional_power(gaussian_transfer(2.0, 128), beta(0.5)), 15);
  CHECK(r.is_valid);
  CHECK(r.imag_residue < 1e-9);
  CHECK(r.dc_gain_error == 0.0);
}

TEST_CASE("validate_kernel on a delta reports zeros") {
  const KernelValidityReport r = validate_kernel(TransferFunction(32, 32, 1.0), 15);
  CHECK(r.is_valid);
  CHECK(r.max_negative_tap == 0.0);
  CHECK(r.imag_residue < 1e-15);
  CHECK(r.dc_gain_error == 0.0);
  CHECK(r.tail_mass < 1e-15);
}

TEST_CASE("a negated bin raised to one half is not a valid kernel") {
  TransferFunction h = gaussian_transfer(2.0, 64);
  h(0, 3) = -h(0, 3);
  const KernelValidityReport r = validate_kernel(fractional_power(h, beta(0.5)), 15);
  CHECK(r.imag_residue > 1e-6);
  CHECK_FALSE(r.is_valid);
}

TEST_CASE("validate_kernel flags each diagnostic independently") {
  const TransferFunction g = gaussian_transfer(2.0, 64);
  SECTION("dc gain") {
    TransferFunction h = g;
    h[0] = 1.01;
    const auto r = validate_kernel(h, 15);
    CHECK_THAT(r.dc_gain_error, WithinAbs(0.01, 1e-12));
    CHECK_FALSE(r.is_valid);
  }
  SECTION("tail mass") {
    const auto r = validate_kernel(gaussian_transfer(4.0, 128), 9);
    CHECK(r.tail_mass > 1e-3);
    CHECK(r.max_negative_tap < 1e-12);
    CHECK_FALSE(r.is_valid);
  }
  SECTION("negative taps") {
    // Unsharp mask: 2*delta - gaussian.
    TransferFunction h = g;
    for (Complex& v : h) v = 2.0 - v;
    const auto r = validate_kernel(h, 33);
    CHECK(r.max_negative_tap > 1e-4);
    CHECK(r.dc_gain_error < 1e-12);
    CHECK_FALSE(r.is_valid);
  }
  SECTION("custom tolerances") {
    ValidityTolerances loose;
    loose.tail_mass = 1.0;
    CHECK(validate_kernel(gaussian_transfer(4.0, 128), 9, loose).is_valid);
  }
}

TEST_CASE("trajectory endpoints") {
  const Image x = make_test_image(TestImageKind::kBroadband, 32, 32, 4);
  const TransferFunction h = gaussian_transfer(2.0, 32, false);
  const auto one = trajectory(x, h, 1);
  REQUIRE(one.size() == 2);
  CHECK(one[0] == x);
  CHECK(one[1] == degrade(x, h, beta(1.0)));
  CHECK_THROWS_AS(trajectory(x, h, 0), InvalidInputError);
}

TEST_CASE("high frequency energy falls along the trajectory") {
  const Image x = make_test_image(TestImageKind::kBroadband, 64, 64, 0);
  const TransferFunction h = gaussian_transfer(3.0, 64, false);
  const auto traj = trajectory(x, h, 4);
  REQUIRE(traj.size() == 5);
  for (std::size_t t = 0; t + 1 < traj.size(); ++t)
    CHECK(high_frequency_energy(traj[t + 1]) < high_frequency_energy(traj[t]));
}

TEST_CASE("high frequency energy counts only the outer band") {
  Image low(16, 16);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) low(0, r, c) = 0.5 + 0.25 * std::cos(2 * M_PI * 3 * c / 16.0);
  CHECK(high_frequency_energy(low) < 1e-18);
  Image high(16, 16);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) high(0, r, c) = 0.5 + 0.25 * std::cos(2 * M_PI * 4 * c / 16.0);
  // Two bins at +-4 with magnitude 0.125 * 256.
  CHECK_THAT(high_frequency_energy(high), WithinAbs(2 * 32.0 * 32.0, 1e-6));
}

TEST_CASE("implied cumulative kernels along the trajectory") {
  const Image x = make_test_image(TestImageKind::kBroadband, 128, 128, 1);
  for (double sigma : {2.0, 3.0, 4.0}) {
    const TransferFunction h = gaussian_transfer(sigma, 128);
    const auto traj = trajectory(x, h, 4);
    const std::size_t support = 2 * static_cast<std::size_t>(std::ceil(4 * sigma)) + 1;
    for (std::size_t t = 1; t < traj.size(); ++t) {
      const KernelEstimate est = estimate_from_images(x, traj[t]);
      const KernelValidityReport r = validate_kernel(est.transfer, support);
      INFO("sigma " << sigma << " t " << t << " neg " << r.max_negative_tap << " imag " << r.imag_residue
                    << " dc " << r.dc_gain_error << " tail " << r.tail_mass);
      CHECK(r.max_negative_tap <= 1e-4);
      CHECK(r.imag_residue <= 1e-6);
      CHECK(r.dc_gain_error <= 1e-4);
      if (t >= 2) {
        CHECK(r.is_valid);
      } else {
        // At beta 1/4 the bins cut by the magnitude floor leave a ringing
        // floor spread over the whole grid.
        CHECK(r.tail_mass < 1e-2);
      }
    }
  }
}
