#pragma once

#include <stdexcept>
#include <string>

namespace cpf {

// Exception hierarchy. The CLI maps each family onto its exit code:
// UsageError/ConfigError -> 1, DataError and subclasses -> 2, anything else -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
  const char* kind() const noexcept override { return "config"; }
};

class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};

class IoError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "io"; }
};

class DomainError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "domain"; }
};

// Pearson correlation on a series with zero variance.
class UndefinedCorrelation : public DomainError {
 public:
  using DomainError::DomainError;
  const char* kind() const noexcept override { return "undefined_correlation"; }
};

class FitError : public DataError {
 public:
  FitError(const std::string& what, int column) : DataError(what), column_(column) {}
  const char* kind() const noexcept override { return "fit"; }
  int column() const noexcept { return column_; }

 private:
  int column_;
};

class InferenceError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "inference"; }
};

class PolicyError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "policy"; }
};

class IndexError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "index"; }
};

}  // namespace cpf
