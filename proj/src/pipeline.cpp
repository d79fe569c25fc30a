#include "convdiff/pipeline.hpp"

#include <cmath>
#include <random>
#include <string>

#include "convdiff/errors.hpp"
#include "convdiff/spectral.hpp"

namespace convdiff {

void InferenceConfig::validate() const {
  if (steps == 0) throw InvalidInputError("inference needs at least one step");
  wiener.validate();
  if (validation_support == 0 || validation_support % 2 == 0)
    throw InvalidInputError("validation support must be odd");
}

namespace {

void guard(const Image& img, double reference_mean, double max_drift, std::size_t t, const char* what) {
  if (!img.all_finite()) throw PipelineDivergenceError(std::string(what) + " has non-finite samples", t);
  const double drift = std::abs(img.mean() - reference_mean);
  if (drift > max_drift)
    throw PipelineDivergenceError(std::string(what) + " mean drifted by " + std::to_string(drift), t);
}

}  // namespace

InferenceResult infer(const Image& y, const Restorer& restorer, const InferenceConfig& cfg) {
  cfg.validate();
  y.validate();

  const std::size_t n = cfg.steps;
  const double y_mean = y.mean();
  const TransferFunction y_luma_spectrum = fft2(luminance(y));

  InferenceResult result;
  Image x_t = y;
  Image x0_hat;
  for (std::size_t t = n; t >= 1; --t) {
    const DegradationStrength strength = DegradationStrength::from_step(t, n);
    try {
      x0_hat = restorer.restore(x_t, strength);
    } catch (const RestorerError& e) {
      throw RestorerError(e.what(), e.diagnostics(), t);
    } catch (const Error& e) {
      throw RestorerError(e.what(), {}, t);
    }
    if (!x0_hat.same_shape(y)) throw RestorerError("restorer changed the image shape", {}, t);
    guard(x0_hat, y_mean, cfg.max_mean_drift, t, "restored estimate");

    InferenceStep step;
    step.t = t;
    step.beta = strength.beta();
    if (cfg.record_intermediates) {
      step.x_t = x_t;
      step.x0_hat = x0_hat;
      step.x_t_spectrum = log_magnitude_spectrum(x_t);
      step.x0_hat_spectrum = log_magnitude_spectrum(x0_hat);
    }

    // The last iteration degrades by beta = 0, which is the identity.
    if (t > 1) {
      const KernelEstimate estimate = wiener_estimate(fft2(luminance(x0_hat)), y_luma_spectrum, cfg.wiener);
      step.dc_status = estimate.dc_status;
      step.excited_fraction = estimate.excited_fraction();
      if (cfg.validate_each_step) step.validity = validate_kernel(estimate.transfer, cfg.validation_support);
      x_t = degrade_unclamped(x0_hat, estimate.transfer, DegradationStrength::from_step(t - 1, n));
      guard(x_t, y_mean, cfg.max_mean_drift, t, "intermediate");
    }
    result.steps.push_back(std::move(step));
  }
  result.restored = x0_hat.clamped();
  return result;
}

double sample_beta(BetaLaw law, std::mt19937_64& rng) {
  for (;;) {
    // Uniform [0,1) from 53 random bits.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (law == BetaLaw::kHalfOpen) return 1.0 - u;  // (0,1]
    if (u > 0.0) return u;                          // (0,1)
  }
}

TrainingTriple make_training_triple(const Image& x0, std::shared_ptr<const TransferFunction> h, double beta) {
  if (!h) throw InvalidInputError("training triple needs a transfer function");
  const DegradationStrength strength = DegradationStrength::from_beta(beta);
  return TrainingTriple{degrade(x0, *h, strength), beta, x0, std::move(h)};
}

std::vector<TrainingTriple> gen_training_samples(const Image& x0, const TransferFunction& h, std::size_t count,
                                                 BetaLaw law, std::uint64_t seed) {
  if (count == 0) throw InvalidInputError("sample count must be at least 1");
  auto shared = std::make_shared<const TransferFunction>(h);
  std::vector<TrainingTriple> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_training_triple(x0, shared, sample_beta(law, rng)));
  return out;
}

}  // namespace convdiff
