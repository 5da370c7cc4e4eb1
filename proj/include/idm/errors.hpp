#pragma once

#include <stdexcept>
#include <string>

namespace idm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, out-of-range indices, invalid parameters.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (non-finite θ, n < 2).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Not enough populated bins or responses to identify a model.
class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure: non-finite objective, singular correspondence,
/// degenerate regression, divergent training. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonIdentifiableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Wraps an error raised inside a pipeline stage with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool numerical)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)), numerical_(numerical) {}
  const std::string& stage() const noexcept { return stage_; }
  bool numerical() const noexcept { return numerical_; }

 private:
  std::string stage_;
  bool numerical_;
};

}  // namespace idm
