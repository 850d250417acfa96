#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semitrotter {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text; `offset()` is the byte position of the fault.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Division by zero, 0^negative, or a non-finite result.
class EvalError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition (non-Hermitian, bad grid, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative routine exhausted its budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : Error(what + " after " + std::to_string(iterations) + " iterations"),
        iterations_(iterations) {}

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Invalid run configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace semitrotter
