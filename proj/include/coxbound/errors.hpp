#pragma once

#include <stdexcept>
#include <string>

namespace coxbound {

// Invalid model/design/config inputs (bad probabilities, pi below floor, ...).
// CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally inconsistent inputs (grid missing a model atom, variant
// incompatible with model/design). CLI maps this to exit code 2.
class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failures (singular or ill-conditioned system, nonconvergence).
// CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace coxbound
