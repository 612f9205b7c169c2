#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regnet {

// Base of every error the library throws. Each subclass maps onto one failure
// contract so callers (the CLI in particular) can pick an exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised by the Cholesky factorization when a pivot is not strictly positive.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOpError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DegenerateSubspaceError : public Error {
 public:
  using Error::Error;
};

// Non-finite training loss. Carries the index of the offending episode within
// its batch.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t episode)
      : Error(what), episode_(episode) {}
  std::size_t episode() const noexcept { return episode_; }

 private:
  std::size_t episode_;
};

}  // namespace regnet
