#pragma once

#include <stdexcept>
#include <string>

namespace covert {

/// Raised when a search over a parameter space finds no admissible point.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when rho carries probability where sigma has none.
class InfiniteDivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or out-of-range run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corrupt or incompatible serialized artifact.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace covert
