#pragma once

#include <stdexcept>

namespace nls3 {

// Bad shapes, non-finite inputs, grid mismatches.
struct GridError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Parameters outside the admissible range or outside a formula's domain.
struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nls3
