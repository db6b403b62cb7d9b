#pragma once

#include <stdexcept>
#include <string>

namespace strata {

/// Base class of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or could not proceed numerically.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Broken internal contract (a bug, not a user error).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace strata
