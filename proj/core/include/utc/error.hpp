#pragma once

#include <stdexcept>
#include <string>

namespace utc {

/// Malformed or inconsistent input data (prices, CSV cells, panel shapes).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A time index that falls outside the admissible range for an operation.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Linear system could not be solved (rank deficient design or Gram matrix).
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyper-parameter or configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace utc
