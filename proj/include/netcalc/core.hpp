// Base units, extended-real helpers and the error type shared by all netcalc modules.
//
// Canonical units are bits, seconds and bits/second. Conversion from the
// Mbps / Kb / ms notation used in scenario files happens at the edges only.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace netcalc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace units {
inline constexpr double kBit = 1.0;
inline constexpr double kKb = 1e3;
inline constexpr double kMb = 1e6;
inline constexpr double kBps = 1.0;
inline constexpr double kKbps = 1e3;
inline constexpr double kMbps = 1e6;
inline constexpr double kGbps = 1e9;
inline constexpr double kSec = 1.0;
inline constexpr double kMs = 1e-3;
inline constexpr double kUs = 1e-6;
}  // namespace units

/// [x]_+ ; [+inf]_+ = +inf, [-inf]_+ = 0.
inline double pos(double x) { return x > 0.0 ? x : 0.0; }

/// [x]_- = max(-x, 0) ; [-inf]_- = +inf.
inline double neg(double x) { return x < 0.0 ? -x : 0.0; }

/// rate * time where a zero factor wins over an infinite one (0 * inf = 0).
inline double scale(double rate, double time) {
  if (rate == 0.0 || time == 0.0) return 0.0;
  return rate * time;
}

enum class ErrorCode {
  kInvalidArgument,
  kUnstableDeconvolution,
  kEmptyInput,
  kUnstable,
  kGammaOutOfRange,
  kThetaBelowStar,
  kEpsilonOutOfRange,
  kMixedSigns,
  kTraceMismatch,
  kInfeasible,
  kConfig,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnstableDeconvolution: return "UnstableDeconvolution";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnstable: return "Unstable";
    case ErrorCode::kGammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::kThetaBelowStar: return "ThetaBelowStar";
    case ErrorCode::kEpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorCode::kMixedSigns: return "MixedSigns";
    case ErrorCode::kTraceMismatch: return "TraceMismatch";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> node = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), node_(node) {}

  ErrorCode code() const noexcept { return code_; }

  /// 1-based node index for stability violations.
  std::optional<std::size_t> node() const noexcept { return node_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> node_;
};

namespace detail {

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorCode::kInvalidArgument, what);
}

inline bool near(double a, double b, double rel = 1e-12, double abs = 1e-12) {
  if (a == b) return true;
  return std::fabs(a - b) <= abs + rel * std::fmax(std::fabs(a), std::fabs(b));
}

}  // namespace detail

}  // namespace netcalc
