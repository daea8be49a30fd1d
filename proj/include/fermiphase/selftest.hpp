#pragma once

// Quick internal-consistency suites behind `fermiphase selftest`.

#include <cstdint>
#include <string>
#include <vector>

#include "fermiphase/models.hpp"

namespace fermiphase {

struct SelfTestCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Anticommutation, nilpotency, associativity, graded product rule and integration by parts on
/// random homogeneous elements over n ≤ 4 modes.
std::vector<SelfTestCheck> algebra_selftest(int cases, std::uint64_t seed);

/// Sampled covariance E[N_p N_q] of the per-step noise N = Σ_a K_a δw_a against dt Σ_a K_a ⊗ K_a,
/// within `z` standard errors, for every pair of noisy entries in both sectors (cross-sector
/// pairs included).
std::vector<SelfTestCheck> noise_selftest(const DriftNoiseCoefficients& coeffs, int samples, double dt,
                                          std::uint64_t seed, double z = 5.0);

}  // namespace fermiphase
