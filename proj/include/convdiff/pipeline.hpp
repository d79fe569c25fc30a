#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "convdiff/degradation.hpp"
#include "convdiff/image.hpp"
#include "convdiff/kernel_estimation.hpp"
#include "convdiff/restorers.hpp"

namespace convdiff {

struct InferenceConfig {
  std::size_t steps = 5;
  WienerConfig wiener;
  bool record_intermediates = false;
  bool validate_each_step = false;
  /// Support window used when validate_each_step is set.
  std::size_t validation_support = 15;
  /// Abort when an intermediate's mean drifts further than this from y's mean.
  double max_mean_drift = 0.1;

  void validate() const;
};

/// One pass of the reverse loop at step t (counting down from n).
struct InferenceStep {
  std::size_t t = 0;
  double beta = 0.0;  ///< t/n, the strength handed to the restorer
  std::optional<Image> x_t;
  std::optional<Image> x0_hat;
  std::optional<Image> x_t_spectrum;
  std::optional<Image> x0_hat_spectrum;
  std::optional<KernelValidityReport> validity;
  DcStatus dc_status = DcStatus::kUntouched;
  double excited_fraction = 0.0;
};

struct InferenceResult {
  Image restored;
  std::vector<InferenceStep> steps;
};

/// Iterative progressive deblurring:
///
///   x_t = y
///   for t = n..1:
///     x0_hat  = restorer(x_t, t/n)
///     H_tilde = wiener(F{x0_hat}, F{y})
///     x_{t-1} = degrade(x0_hat, H_tilde, (t-1)/n)
///   return x0_hat
///
/// Intermediates are never clamped; the result is clamped once at the end.
/// Kernel re-estimation always measures against the original y.
InferenceResult infer(const Image& y, const Restorer& restorer, const InferenceConfig& cfg = {});

enum class BetaLaw {
  kHalfOpen,  ///< U(0,1]
  kOpen,      ///< U(0,1)
};

struct TrainingTriple {
  Image x_beta;
  double beta;
  Image x0;
  /// Generating blur; x_beta = degrade(x0, *transfer, beta).
  std::shared_ptr<const TransferFunction> transfer;
};

TrainingTriple make_training_triple(const Image& x0, std::shared_ptr<const TransferFunction> h, double beta);

/// `count` triples with independent beta draws; deterministic in `seed`.
std::vector<TrainingTriple> gen_training_samples(const Image& x0, const TransferFunction& h, std::size_t count,
                                                 BetaLaw law, std::uint64_t seed);

double sample_beta(BetaLaw law, std::mt19937_64& rng);

}  // namespace convdiff
