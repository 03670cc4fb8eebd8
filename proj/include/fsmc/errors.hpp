#pragma once

#include <stdexcept>
#include <string>

namespace fsmc {

// Bad construction arguments (invalid prior spec, out-of-range order, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad runtime input (point outside the domain, empty record stream, ...).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation failure carrying context (solver non-convergence, ...).
struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fsmc
