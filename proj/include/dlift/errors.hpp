#pragma once

#include <stdexcept>
#include <string>

namespace dlift {

// Caller violated an operation precondition (dimension mismatch, fixed
// coordinate refined twice, insufficient sample, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal invariant failed; indicates a bug or a corrupted input object.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConditioningOnNull : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InfeasibleNoise : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Planted decomposition could not be assembled (leakage, coverage, weights).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dlift
