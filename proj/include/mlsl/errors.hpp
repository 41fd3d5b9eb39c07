#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlsl {

enum class ErrorKind {
  MalformedDocument,
  InvariantViolation,
  DimensionMismatch,
  NonFiniteState,
  OutOfBox,
  MassLeak,
  ResolutionInsufficient,
  SizeExceeded,
  NotConverged,
  NotNormalized,
  NotPSD,
  NonPositiveInput,
  SupportViolation,
  GCViolated,
  IoFailure,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (and tests) can branch on the category rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace mlsl
