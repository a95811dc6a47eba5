#pragma once

#include <stdexcept>
#include <string>

namespace sxtract {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing, unknown or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. The message carries the line number and field path.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity reached a loss or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sxtract
