#pragma once

#include <stdexcept>
#include <string>

namespace mogat {

// Base of every exception thrown by the library. The CLI maps subclasses to
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files or invalid configuration values.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical precondition failed (degenerate variances, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Feature selection produced nothing.
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

// Stratified cross-validation cannot be built for the given labels.
class CvInfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace mogat
