#pragma once

#include <stdexcept>
#include <string>

namespace cogmtl {

// Malformed or inconsistent input data (CSV schema, duplicate ids, non-finite values).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad run configuration: unknown method names, missing keys, unreadable paths.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver failures: SVD non-convergence, divergence, singular designs.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cogmtl
