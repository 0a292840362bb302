#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noether {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is a 0-based character offset.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t pos, std::string expected_token = {})
      : Error(what + " at position " + std::to_string(pos) +
              (expected_token.empty() ? std::string{} : " (expected " + expected_token + ")")),
        reason(what),
        position(pos),
        expected(std::move(expected_token)) {}
  std::string reason;
  std::size_t position;
  std::string expected;
};

/// Numeric evaluation outside the domain of a subexpression (pole, log of a
/// nonpositive value, division by zero).
struct DomainError : Error {
  DomainError(const std::string& what, std::string sub)
      : Error(what + " in '" + sub + "'"), subexpr(std::move(sub)) {}
  std::string subexpr;
};

/// Input that parses but violates a structural or mathematical invariant.
struct ValidationError : Error {
  using Error::Error;
};

/// An operation was called with its preconditions violated.
struct PreconditionError : Error {
  using Error::Error;
};

}  // namespace noether
