#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace fermiphase {

/// coefficient · c†_a c†_b c_c c_d
struct TwoBodyTerm {
  int a = 0, b = 0, c = 0, d = 0;
  std::complex<double> coefficient;
};

/// Second-quantized Hamiltonian over a finite set of fermion modes,
/// H = Σ h_ab c†_a c_b + Σ w c†_a c†_b c_c c_d.  Shared by the exact oracle and the symbolic
/// drift/diffusion derivation so both see the same discretization.
struct ModeHamiltonian {
  int n_modes = 0;
  double hbar = 1.0;
  Eigen::MatrixXcd one_body;
  std::vector<TwoBodyTerm> two_body;

  ModeHamiltonian() = default;
  ModeHamiltonian(int n, double hbar_value)
      : n_modes(n), hbar(hbar_value), one_body(Eigen::MatrixXcd::Zero(n, n)) {}
};

}  // namespace fermiphase
