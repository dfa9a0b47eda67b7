#include "fine/error.hpp"

namespace fine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Convergence: return "Convergence";
    case ErrorCode::NotUnit: return "NotUnit";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::InvalidMapping: return "InvalidMapping";
    case ErrorCode::InvalidSuperclass: return "InvalidSuperclass";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CorruptLabels: return "CorruptLabels";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ConvergenceError::ConvergenceError(double residual, int iterations)
    : Error(ErrorCode::Convergence,
            "power iteration did not converge after " + std::to_string(iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
      residual_(residual),
      iterations_(iterations) {}

}  // namespace fine
