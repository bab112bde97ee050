#pragma once

#include <stdexcept>
#include <string>

namespace esai {

/// Caller passed an argument outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent data encountered in a file or stream.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime (divergence, degenerate search, ...).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace esai
