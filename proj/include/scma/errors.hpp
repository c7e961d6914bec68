#pragma once

#include <stdexcept>

namespace scma {

// Invalid construction arguments (bad d, negative budget, mismatched sizes).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Channel data that cannot be used (non-finite or negative gains, zero noise).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Brute-force search space above the enumeration guard.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Ratio with a zero denominator, e.g. energy efficiency with no consumed power.
class DivisionGuardError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace scma
