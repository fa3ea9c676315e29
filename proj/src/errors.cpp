#include "divkit/errors.hpp"

namespace divkit {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::SizeTooLarge: return "SizeTooLarge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::EmptyHistogram: return "EmptyHistogram";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::BadArguments: return "BadArguments";
    case ErrorKind::EmptyBank: return "EmptyBank";
    case ErrorKind::NonPositiveBandwidth: return "NonPositiveBandwidth";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NotUnitTrace: return "NotUnitTrace";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorKind::EigenFailure: return "EigenFailure";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::BadArguments:
    case ErrorKind::InvalidGrid:
      return 1;
    case ErrorKind::NotUnitTrace:
    case ErrorKind::NotPSD:
    case ErrorKind::SizeCapExceeded:
    case ErrorKind::EigenFailure:
      return 3;
    default:
      return 2;
  }
}

}  // namespace divkit
