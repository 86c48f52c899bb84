#pragma once

#include <stdexcept>
#include <string>

namespace drdamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when no operating point or no feasible tuning exists.
class InfeasibleError : public Error {
public:
  using Error::Error;
};

/// Malformed input files (CSV/JSON).
class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace drdamp
