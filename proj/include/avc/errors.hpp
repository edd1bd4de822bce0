#pragma once

#include <stdexcept>
#include <string>

namespace avc {

/// Bad argument to a sampler or density (non-positive scale, probability
/// outside its domain, mismatched dimensions).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ingestion or validation failure on user data. Messages name the file and
/// row where possible.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent run or generation configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure inside the sampler (non-PD system, non-finite draw).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace avc
