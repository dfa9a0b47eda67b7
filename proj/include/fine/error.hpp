#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fine {

enum class ErrorCode {
  EmptyClass,
  DimensionMismatch,
  Convergence,
  NotUnit,
  TooFewSamples,
  InvalidRate,
  InvalidMapping,
  InvalidSuperclass,
  InvalidSpec,
  EmptyDataset,
  LengthMismatch,
  InvalidDelta,
  InvalidSigma,
  EmptySet,
  FormatError,
  TruncatedFile,
  CorruptLabels,
  ParseError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Power iteration ran out of iterations; carries the residual of the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(double residual, int iterations);

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace fine
