#pragma once

#include <stdexcept>
#include <string>

namespace fermiphase {

/// Inputs that are structurally incompatible (dimension or generator-set mismatch, bounds).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented invariant (symmetry, units, lattice membership).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Hamiltonian that cannot be written in the supported drift/diffusion form.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the excluded-trajectory fraction exceeds the configured ceiling.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fermiphase
