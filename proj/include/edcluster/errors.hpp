#pragma once

#include <stdexcept>
#include <string>

namespace edc {

// Base for every error the library reports. The CLI maps the three
// subclasses onto its exit codes (2, 3, 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: k out of range, malformed edges, bad partition, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be used: malformed files, mismatched geometry.
class DataError : public Error {
 public:
  using Error::Error;
};

// A post-condition the library itself failed to establish.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace edc
