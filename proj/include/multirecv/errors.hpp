#pragma once

#include <stdexcept>
#include <string>

namespace multirecv {

// Base of every exception thrown by the library. The C API maps each subclass
// onto its own status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed input files (event logs, attribute tables, dataset containers).
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A sampler state broke one of its own invariants (e.g. y != 1(z > c)).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace multirecv
