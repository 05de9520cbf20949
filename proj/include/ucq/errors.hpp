#pragma once

#include <stdexcept>
#include <string>

namespace ucq {

// Malformed input: bad documents, inconsistent dimensions, violated
// preconditions on user-supplied values. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Request exceeds a hard resource limit (brute-force width, simulator qubits)
// or a configuration is internally inconsistent. CLI exit code 2.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public CapacityError {
 public:
  using CapacityError::CapacityError;
};

// Coefficient blew past the representable range during QUBO expansion.
class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ucq
