#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace separapde {

enum class ErrorCode {
  invalid_range,
  unsupported_source,
  incompatible_domain,
  incompatible_mesh,
  singular_system,
  singular_direction,
  non_finite_gradient,
  point_outside_reference,
  degenerate_element,
  parse_error,
  usage,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_range: return "invalid-range";
    case ErrorCode::unsupported_source: return "unsupported-source";
    case ErrorCode::incompatible_domain: return "incompatible-domain";
    case ErrorCode::incompatible_mesh: return "incompatible-mesh";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::singular_direction: return "singular-direction-system";
    case ErrorCode::non_finite_gradient: return "non-finite-gradient";
    case ErrorCode::point_outside_reference: return "point-outside-reference";
    case ErrorCode::degenerate_element: return "degenerate-element";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

/// Exception carrying one of the library's error kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace separapde
