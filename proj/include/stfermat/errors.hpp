#pragma once

#include <stdexcept>
#include <string>

namespace stfermat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An evaluator of a model returned a non-finite value.
class ModelEvaluationError : public Error {
public:
  using Error::Error;
};

/// The operation is not defined for this kind of model (e.g. the causal cone
/// of a non-homogeneous Lagrangian).
class UnsupportedOperation : public Error {
public:
  using Error::Error;
};

/// Caller violated a documented precondition (path off the constraint set,
/// non-tangent variation, index out of range, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// The energy level is not admissible for the model, or the square root in
/// the arrival time is negative.
class AdmissibilityError : public Error {
public:
  using Error::Error;
};

/// Invalid argument values (empty regions, bad options, degenerate endpoints).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Malformed text input. `line` is 0 when no line information is available.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line = 0)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line)
  {}

  int line() const noexcept { return line_; }

private:
  int line_;
};

} // namespace stfermat
