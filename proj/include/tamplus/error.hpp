// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tamplus {

/// Raised when an input violates a documented precondition (bad profile,
/// out-of-range parameter, malformed file). The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// The exhaustive matching oracle refuses instances above its size guard.
class OracleTooLarge : public std::length_error {
public:
  explicit OracleTooLarge(const std::string& what) : std::length_error(what) {}
};

/// A proven per-trial inequality failed. Always a bug, never a statistical fluke.
class InvariantViolation : public std::logic_error {
public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace tamplus
