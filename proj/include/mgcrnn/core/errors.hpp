#pragma once

#include <stdexcept>
#include <string>

namespace mgcrnn {

// Error taxonomy shared by every module. All derive from std::runtime_error so
// callers that only care about "something failed" can catch one type.

/// Operand shapes do not conform for a primitive.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric parameter is outside its admissible range.
class ParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run or model configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data fails an integrity check (wrong slot counts, disconnected network, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An object was used in the wrong lifecycle state (e.g. transform before fit).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or infinity appeared where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A categorical code or lookup index is out of range.
class IndexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mgcrnn
