#include "mlsl/errors.hpp"

namespace mlsl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedDocument: return "MalformedDocument";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::OutOfBox: return "OutOfBox";
    case ErrorKind::MassLeak: return "MassLeak";
    case ErrorKind::ResolutionInsufficient: return "ResolutionInsufficient";
    case ErrorKind::SizeExceeded: return "SizeExceeded";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NonPositiveInput: return "NonPositiveInput";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::GCViolated: return "GCViolated";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace mlsl
