#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace carca {

// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (e.g. backward() on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyper-parameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Anything wrong with input data: unreadable files, bad rows, dangling ids.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An id refers to something that does not exist (unknown item, missing attribute row).
class ReferentialError : public DataError {
 public:
  using DataError::DataError;
};

/// Not enough items to draw the requested negatives.
class SamplingError : public DataError {
 public:
  using DataError::DataError;
};

/// Checkpoint is unreadable, from another format version, or does not match the run.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace carca
