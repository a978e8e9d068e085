#pragma once

#include <stdexcept>
#include <string>

namespace sprinter {

// Error hierarchy. The CLI maps each category onto a distinct exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched lengths or column counts.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad user input: non-finite cells, unknown tokens, missing categories.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce a usable answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sprinter
