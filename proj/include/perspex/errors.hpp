// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace perspex {

enum class ErrorKind {
  DomainError,
  DegenerateTangents,
  HypothesisViolated,
  MaxIterExceeded,
  MonotonicityViolated,
  SingularJacobian,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DegenerateTangents: return "DegenerateTangents";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::MonotonicityViolated: return "MonotonicityViolated";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
  }
  return "Unknown";
}

/// Base for every error the library raises. `kind()` is stable and is what
/// the CLI reports; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Shortest round-trip decimal for error messages.
inline std::string to_text(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace perspex
