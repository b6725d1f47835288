#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace riskagg {

enum class Errc {
  Parse,
  DuplicateLabel,
  InsufficientData,
  ZeroVariance,
  OutOfRange,
  ShapeMismatch,
  NonFinite,
  Collinearity,
  Singular,
  Divergence,
  Convergence,
  Config,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// True for failures that come from the numbers themselves rather than from
/// malformed inputs or configuration.
bool is_numeric_failure(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace riskagg
