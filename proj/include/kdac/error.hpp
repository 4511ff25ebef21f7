#pragma once

#include <stdexcept>
#include <string>

namespace kdac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand grids disagree in size, or a size violates an operation's precondition.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter is outside its admissible range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numeric procedure failed (divergence, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File contents violate the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kdac
