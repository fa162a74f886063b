#pragma once

#include <stdexcept>
#include <string>

namespace gasgraph {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Operand shapes are incompatible. Messages carry both shapes.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// An on-disk file could not be parsed or failed validation.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value or diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gasgraph
