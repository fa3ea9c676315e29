#pragma once

#include <stdexcept>
#include <string>

namespace divkit {

enum class ErrorKind {
  Usage,
  MalformedFile,
  NonFiniteEntry,
  EmptySet,
  IoFailure,
  SizeTooLarge,
  DimensionMismatch,
  TooFewSamples,
  EmptyHistogram,
  InvalidGrid,
  DimensionTooLarge,
  BadArguments,
  EmptyBank,
  NonPositiveBandwidth,
  ZeroVector,
  NotUnitTrace,
  NotPSD,
  SizeCapExceeded,
  EigenFailure,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exit code contract of the CLI: 1 usage, 2 data, 3 numeric.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace divkit
