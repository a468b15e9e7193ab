#pragma once

#include <stdexcept>
#include <string>

namespace bms {

// Root of every error the library throws. The C API maps each subclass to a
// distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed manifest or blob, unknown channel name, bad scenario text.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Array shapes disagree (manifest vs blob, signals vs geometry, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Target and reference scans cannot be combined.
class IncompatibleScanError : public Error {
 public:
  using Error::Error;
};

// Invalid parameter values or object invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A metric has no defined value for the given input (e.g. empty clutter region).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace bms
