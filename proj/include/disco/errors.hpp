#pragma once

#include <stdexcept>
#include <string>

namespace disco {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter outside its admissible range (beta, weights, sigma, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the call itself was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Too few samples for an unbiased estimator.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (CSV rows, parameter files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input that parses but has the wrong layout (arity, header, version).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace disco
