#pragma once

#include <stdexcept>
#include <string>

namespace ergo {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rate-grammar syntax error; carries the byte offset into the input.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), pos(position) {}
  std::size_t pos;
};

/// Structural problem with a chain model or weight matrix.
struct ModelError : Error {
  using Error::Error;
};

/// Bad vector/argument handed to a numeric routine.
struct DomainError : Error {
  using Error::Error;
};

/// Adaptive quadrature could not meet its tolerance.
struct QuadratureError : Error {
  using Error::Error;
};

/// ODE integration failure (step underflow, simplex drift, stiffness).
struct SolverError : Error {
  using Error::Error;
};

/// Malformed configuration file.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace ergo
