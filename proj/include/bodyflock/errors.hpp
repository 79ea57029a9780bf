#pragma once

#include <stdexcept>
#include <string>

namespace bodyflock {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failures (singular systems, degenerate averages, domain violations).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotAntisymmetric : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NegativeDeterminant : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SolveFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateWeight : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid user configuration; `key()` names the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bodyflock
