#pragma once

#include <stdexcept>
#include <string>

namespace oms {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (zero-norm vectors, duplicate ids,
/// unknown casts, bad configuration values).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Vector or state lengths that disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// File parsing failure; the message carries the path and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Q-learning diverged (non-finite loss) or was handed unusable data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace oms
