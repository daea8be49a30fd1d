#pragma once

// Exact Fock-space reference built with the Jordan–Wigner sign rule.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fermiphase/mode_hamiltonian.hpp"
#include "fermiphase/moment_tensor.hpp"

namespace fermiphase::fock {

using OperatorMatrix = Eigen::MatrixXcd;
using DensityMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr int kMaxModes = 8;

/// Occupation-bitmask basis of 2^n states with a fixed mode order.
class FockBasis {
 public:
  explicit FockBasis(int n_modes);
  int n_modes() const { return n_modes_; }
  int dimension() const { return 1 << n_modes_; }

 private:
  int n_modes_;
};

struct FockOperators {
  FockBasis basis;
  std::vector<OperatorMatrix> annihilation;
  std::vector<OperatorMatrix> creation;
};

/// c_i|…1_i…⟩ = (−1)^{η_i}|…0_i…⟩, η_i = number of occupied modes preceding i.
FockOperators build_fock_operators(int n_modes);

OperatorMatrix number_operator(const FockOperators& ops);
OperatorMatrix hamiltonian_matrix(const ModeHamiltonian& h, const FockOperators& ops);

/// c†_{m_1} … c†_{m_p}|0⟩ (zero vector if a mode repeats).
StateVector fock_state(int n_modes, std::span<const int> modes);
DensityMatrix pure_density(const StateVector& psi);

/// Exact unitary evolution through an eigendecomposition of the assembled Hamiltonian.
class ExactEvolver {
 public:
  explicit ExactEvolver(const ModeHamiltonian& h);

  DensityMatrix evolve(const DensityMatrix& rho0, double t) const;
  const OperatorMatrix& hamiltonian() const { return hamiltonian_; }

 private:
  double hbar_;
  OperatorMatrix hamiltonian_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd eigenvectors_;
};

DensityMatrix evolve_exact(const ModeHamiltonian& h, const DensityMatrix& rho0, double t);

/// Tr(|ket⟩⟨bra| ρ) = ⟨bra|ρ|ket⟩ with |m_1…m_p⟩ = c†_{m_1}…c†_{m_p}|0⟩.
std::complex<double> exact_coherence(const DensityMatrix& rho, std::span<const int> bra,
                                     std::span<const int> ket);

/// Mode-basis tensor M(m|l) = ⟨m|ρ|l⟩ for all ordered p-tuples, read directly from ρ.
MomentTensor exact_moment_tensor(const DensityMatrix& rho, int order);

}  // namespace fermiphase::fock
