#pragma once

#include <stdexcept>
#include <string>

namespace hardylab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parameters outside the admissible range of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed or schema-violating run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// An eigensolver or time stepper could not produce an accepted result.
class SolverError : public Error {
public:
  using Error::Error;
};

/// A checked mathematical invariant was violated at run time.
class InvariantViolation : public Error {
public:
  using Error::Error;
};

namespace detail {

template <class E = DomainError>
inline void require(bool ok, const std::string &what) {
  if (!ok)
    throw E(what);
}

} // namespace detail
} // namespace hardylab
