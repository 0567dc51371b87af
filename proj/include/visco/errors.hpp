#pragma once

#include <stdexcept>
#include <string>

namespace visco {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (e.g. F(0) for a singular law).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Model parameters that violate the constraints of their kind.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Invalid basis / grid configuration.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Initial field rejected by the projection (divergence or mean too large).
class RejectionError : public Error {
 public:
  using Error::Error;
};

class UnknownModeError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class NonfiniteStateError : public Error {
 public:
  using Error::Error;
};

class StepUnderflowError : public Error {
 public:
  using Error::Error;
};

/// Diagnostic pre-condition failures (short windows, zero states, missing brackets).
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

/// Config document errors. `line` is 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Semantic validation failure naming the offending key.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace visco
