#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "convdiff/degradation.hpp"
#include "convdiff/grid.hpp"
#include "convdiff/image.hpp"

namespace convdiff {

/// Inverse-degradation model: maps a partially blurred image and its strength
/// beta to an estimate of the sharp image. Implementations must preserve the
/// image shape and should return the input unchanged at beta = 0.
class Restorer {
 public:
  virtual ~Restorer() = default;

  virtual std::string name() const = 0;
  virtual std::string description() const = 0;

  /// Throws RestorerError on failure.
  virtual Image restore(const Image& x_beta, DegradationStrength beta) const = 0;
};

using RestorerHandle = std::shared_ptr<const Restorer>;

/// Always returns `reference`. Useful for exercising the inference loop.
RestorerHandle oracle_restorer(Image reference);

/// Returns its input.
RestorerHandle identity_restorer();

inline constexpr double kDefaultDeconvRegularization = 1e-2;

/// Classical Wiener deconvolution by the beta-fractional transfer:
/// X = Y conj(H^beta) / (|H^beta|^2 + snr_reg), clamped to [0,1].
RestorerHandle wiener_deconv_restorer(TransferFunction h, double snr_reg = kDefaultDeconvRegularization);

struct ExternalRestorerConfig {
  /// Shell command; `--input <path> --beta <float> --output <path>` is appended.
  std::string command;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
};

/// Bridge to an out-of-process model speaking the tensor-file protocol.
/// Calls on one handle are serialized.
RestorerHandle external_restorer(ExternalRestorerConfig cfg);

/// Parses "identity", "wiener" or "external:<cmd>". Wiener needs `h`.
RestorerHandle make_restorer(const std::string& choice, const TransferFunction* h,
                             double snr_reg = kDefaultDeconvRegularization);

}  // namespace convdiff
