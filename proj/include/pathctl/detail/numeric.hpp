#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <system_error>

namespace pathctl {

/// Raised when a time or duration does not land on a path's uniform grid.
class GridAlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when two vectors/paths that must share a dimension do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a backward march or a simulation produces non-finite values.
class NumericalBlowUp : public std::runtime_error {
 public:
  NumericalBlowUp(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

namespace detail {

inline constexpr double kGridTolerance = 1e-9;

/// Number of grid steps of length `dt` spanned by `duration`. Throws when the
/// ratio is not an integer up to a relative tolerance of 1e-9.
inline std::int64_t grid_steps(double duration, double dt, const char* what = "duration") {
  if (!(dt > 0.0)) throw GridAlignmentError("grid step must be positive");
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > kGridTolerance * std::max(1.0, std::abs(rounded))) {
    throw GridAlignmentError(std::string(what) + " " + std::to_string(duration) +
                             " is not a multiple of the grid step " + std::to_string(dt));
  }
  return static_cast<std::int64_t>(rounded);
}

inline bool same_step(double a, double b) {
  return std::abs(a - b) <= kGridTolerance * std::max(std::abs(a), std::abs(b));
}

/// Shortest representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  // from_chars rejects a leading '+', strip it
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace detail
}  // namespace pathctl
