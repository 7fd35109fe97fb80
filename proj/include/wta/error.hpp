#pragma once

#include <stdexcept>
#include <string>

namespace wta {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (bad k, M not dividing P, unknown config key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input values outside the domain of an operation (NaN, infinities).
class InputError : public Error {
 public:
  using Error::Error;
};

/// API misuse: duplicate ids, unknown ids, targets outside the active set.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate results.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File and format errors.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wta
