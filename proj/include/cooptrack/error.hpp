#pragma once

#include <stdexcept>
#include <string>

namespace cooptrack {

// Every error raised by the library derives from Error. The CLI maps the
// concrete categories onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: non-finite state, malformed measurement, wrong window size.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Filter or solver lost numerical validity (singular innovation, negative
// covariance eigenvalue).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected (unknown key, out of range value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data could not be parsed or is inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator vanished.
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace cooptrack
