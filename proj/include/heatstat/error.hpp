#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatstat {

enum class Errc {
  not_hermitian,
  not_unitary,
  no_convergence,
  dimension_mismatch,
  invalid_argument,
  unsupported_distribution,
  range_exceeded,
  order_too_high,
  too_large,
  degenerate_observable,
  degenerate_fit,
  no_root_in_bracket,
  degenerate_root,
  config,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::not_hermitian: return "NotHermitian";
    case Errc::not_unitary: return "NotUnitary";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::unsupported_distribution: return "UnsupportedDistribution";
    case Errc::range_exceeded: return "RangeExceeded";
    case Errc::order_too_high: return "OrderTooHigh";
    case Errc::too_large: return "TooLarge";
    case Errc::degenerate_observable: return "DegenerateObservable";
    case Errc::degenerate_fit: return "DegenerateFit";
    case Errc::no_root_in_bracket: return "NoRootInBracket";
    case Errc::degenerate_root: return "DegenerateRoot";
    case Errc::config: return "ConfigError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Configuration failure tied to a field path such as "observable.basis".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(Errc::config, field + ": " + message), field_(std::move(field)), detail_(message) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

/// Range failures map to exit code 3; config failures map to exit code 2.
inline bool is_numerical_range_error(Errc code) {
  return code == Errc::range_exceeded || code == Errc::no_convergence ||
         code == Errc::no_root_in_bracket || code == Errc::degenerate_root ||
         code == Errc::degenerate_fit || code == Errc::too_large;
}

}  // namespace heatstat
