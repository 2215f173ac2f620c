#pragma once

#include <stdexcept>
#include <string>

namespace sjsr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent sizes (non-triangular svec length, mismatched vectors, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or a numerical routine that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a mathematical function (e.g. kappa of a
/// matrix that is not positive definite).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// No feasible level was found while bracketing the quasi-linear problem.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Query issued against an object in the wrong state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of a pipeline step does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A mode of a switched system admits an exact quadratic contraction
/// identity, which voids the non-degeneracy argument behind the certificate.
class BarabanovError : public ConfigError {
 public:
  BarabanovError(std::string message, std::size_t mode)
      : ConfigError(std::move(message)), mode_(mode) {}
  std::size_t mode() const noexcept { return mode_; }

 private:
  std::size_t mode_;
};

}  // namespace sjsr
