#pragma once

#include <stdexcept>

namespace zlpf {

// Malformed user-facing input: files, schemas, out-of-domain arguments.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A preset or layer parameter violates its admissibility constraints
// (e.g. a Kent scale outside its concentration-dependent interval).
class ConstraintError : public InputError {
 public:
  using InputError::InputError;
};

// An iteration cap or tolerance could not be met. Indicates a parameter
// regime outside the supported envelope or a genuine numerical failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fit aborted because the objective moved far above the uniform baseline.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zlpf
