// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prepivot {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  invalid_design,
  too_large,
  infeasible_balance,
  decomposition,
  singular_regression,
  variance_undefined,
  balance_mass,
  invalid_contrast,
  io,
  schema,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::invalid_design: return "invalid_design";
    case ErrorKind::too_large: return "too_large";
    case ErrorKind::infeasible_balance: return "infeasible_balance";
    case ErrorKind::decomposition: return "decomposition";
    case ErrorKind::singular_regression: return "singular_regression";
    case ErrorKind::variance_undefined: return "variance_undefined";
    case ErrorKind::balance_mass: return "balance_mass";
    case ErrorKind::invalid_contrast: return "invalid_contrast";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code and a machine-readable diagnostic.
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

}  // namespace prepivot
