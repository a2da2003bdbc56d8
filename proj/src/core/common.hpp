#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rpdmon {

enum class Status : int {
  Ok = 0,
  InvalidArgument = 1,
  InvalidState = 2,
  ParseError = 3,
  IoError = 4,
  HttpError = 5,
  Internal = 6,
};

/// Error carrying a Status code; translated to plain codes at the C boundary.
class Error : public std::runtime_error {
 public:
  Error(Status code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Status code() const { return code_; }

 private:
  Status code_;
};

/**
 * Neumaier-compensated accumulator.
 *
 * Tracks the rounding error of every addition and folds it back on read,
 * keeping long add/subtract streams accurate to a few ulp independent of
 * length. Subtraction is addition of the negated value.
 */
struct KahanAccumulator {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double value) {
    const double t = sum + value;
    if (std::abs(sum) >= std::abs(value)) {
      compensation += (sum - t) + value;
    } else {
      compensation += (value - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + compensation; }

  void reset(double v = 0.0) {
    sum = v;
    compensation = 0.0;
  }
};

inline bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view rstrip(std::string_view s) {
  while (!s.empty() && is_space_byte(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string_view lstrip(std::string_view s) {
  while (!s.empty() && is_space_byte(s.front())) s.remove_prefix(1);
  return s;
}

inline std::string_view strip(std::string_view s) { return lstrip(rstrip(s)); }

}  // namespace rpdmon
