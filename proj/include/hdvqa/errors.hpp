#pragma once

#include <stdexcept>
#include <string>

namespace hdvqa {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands of an algebra or network operation disagree on size.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Cosine (or a query built on it) was asked to normalize an all-zero vector.
class ZeroNormError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: bad scene, bad file, mismatched seeds, bad config.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf in a model or loss, or a diverged training run.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Unparseable user-facing string (question, concept name, selector).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdvqa
