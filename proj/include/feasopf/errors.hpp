#pragma once

#include <stdexcept>
#include <string>

namespace feasopf {

/// Base class for every error raised by the library. The CLI maps the
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: dimension mismatches, invalid case files, violated
/// preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An optimization or training step could not produce a usable result.
class SolverError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace detail
}  // namespace feasopf
