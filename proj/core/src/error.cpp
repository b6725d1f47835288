#include "riskagg/error.hpp"

namespace riskagg {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Parse: return "ParseError";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::OutOfRange: return "RangeError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::Collinearity: return "CollinearityError";
    case Errc::Singular: return "SingularMatrix";
    case Errc::Divergence: return "Divergence";
    case Errc::Convergence: return "ConvergenceFailure";
    case Errc::Config: return "ConfigError";
    case Errc::Io: return "IoError";
  }
  return "Unknown";
}

bool is_numeric_failure(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroVariance:
    case Errc::NonFinite:
    case Errc::Collinearity:
    case Errc::Singular:
    case Errc::Divergence:
    case Errc::Convergence:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace riskagg
