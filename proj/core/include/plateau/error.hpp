#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plateau {

enum class ErrorKind {
  invalid_argument,
  precondition,
  degenerate_spectrum,
  invalid_height,
  ambiguous_frame,
  newton_divergence,
  cone_violation,
  mapped_grid_degeneracy,
  invalid_state,
  audit_precondition,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace plateau
