#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace convdiff {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, non-finite samples, out-of-range parameters.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Malformed image, tensor, kernel or config file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::optional<std::size_t> byte_offset = std::nullopt)
      : Error(byte_offset ? what + " (at byte offset " + std::to_string(*byte_offset) + ")" : what),
        byte_offset_(byte_offset) {}

  std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }

  /// Same error with `prefix` (typically a file name) prepended.
  ParseError prefixed(const std::string& prefix) const {
    ParseError e(*this);
    static_cast<Error&>(e) = Error(prefix + ": " + what());
    return e;
  }

 private:
  std::optional<std::size_t> byte_offset_;
};

/// A restorer failed; carries the inference step when raised inside the loop.
class RestorerError : public Error {
 public:
  RestorerError(const std::string& what, std::string diagnostics = {},
                std::optional<std::size_t> step = std::nullopt)
      : Error(step ? "step " + std::to_string(*step) + ": " + what : what),
        diagnostics_(std::move(diagnostics)),
        step_(step) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::string diagnostics_;
  std::optional<std::size_t> step_;
};

class PipelineDivergenceError : public Error {
 public:
  PipelineDivergenceError(const std::string& what, std::size_t step)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace convdiff
