#pragma once

#include <stdexcept>
#include <string>

namespace fvqsd {

// Raised by the library when a run cannot produce meaningful numbers
// (coarse time step, non-convergence, underflow, violated preconditions).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised while reading or validating an experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fvqsd
