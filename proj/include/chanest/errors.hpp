#pragma once

#include <stdexcept>
#include <string>

namespace chanest {

/// Caller passed something outside an operation's contract.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite or otherwise unsupported numeric input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A factorization or training run produced unusable numbers.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, truncated or inconsistent data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration file or command-line value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ArgumentError(message);
}

}  // namespace detail
}  // namespace chanest
