#include "fermiphase/fock.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "fermiphase/error.hpp"

namespace fermiphase::fock {

namespace {

int jordan_wigner_sign(unsigned occupation, int mode) {
  return (std::popcount(occupation & ((1u << mode) - 1u)) & 1) ? -1 : 1;
}

void check_modes(int n_modes, std::span<const int> modes) {
  for (int m : modes) {
    if (m < 0 || m >= n_modes) {
      throw ConfigurationError("mode index " + std::to_string(m) + " out of range");
    }
  }
}

}  // namespace

FockBasis::FockBasis(int n_modes) : n_modes_(n_modes) {
  if (n_modes < 1 || n_modes > kMaxModes) {
    throw ConfigurationError("exact oracle supports 1.." + std::to_string(kMaxModes) + " modes, got " +
                             std::to_string(n_modes));
  }
}

FockOperators build_fock_operators(int n_modes) {
  FockOperators ops{FockBasis(n_modes), {}, {}};
  const int dim = ops.basis.dimension();
  for (int i = 0; i < n_modes; ++i) {
    OperatorMatrix c = OperatorMatrix::Zero(dim, dim);
    for (unsigned occ = 0; occ < static_cast<unsigned>(dim); ++occ) {
      if (occ & (1u << i)) c(occ & ~(1u << i), occ) = static_cast<double>(jordan_wigner_sign(occ, i));
    }
    ops.creation.push_back(c.adjoint());
    ops.annihilation.push_back(std::move(c));
  }
  return ops;
}

OperatorMatrix number_operator(const FockOperators& ops) {
  const int dim = ops.basis.dimension();
  OperatorMatrix n = OperatorMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < ops.annihilation.size(); ++i) n += ops.creation[i] * ops.annihilation[i];
  return n;
}

OperatorMatrix hamiltonian_matrix(const ModeHamiltonian& h, const FockOperators& ops) {
  if (h.n_modes != ops.basis.n_modes()) throw ConfigurationError("Hamiltonian/basis mode count mismatch");
  const int dim = ops.basis.dimension();
  OperatorMatrix H = OperatorMatrix::Zero(dim, dim);
  for (int a = 0; a < h.n_modes; ++a) {
    for (int b = 0; b < h.n_modes; ++b) {
      if (h.one_body(a, b) != 0.0) H += h.one_body(a, b) * (ops.creation[a] * ops.annihilation[b]);
    }
  }
  for (const auto& t : h.two_body) {
    check_modes(h.n_modes, std::array{t.a, t.b, t.c, t.d});
    H += t.coefficient *
         (ops.creation[t.a] * ops.creation[t.b] * ops.annihilation[t.c] * ops.annihilation[t.d]);
  }
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigurationError("assembled Hamiltonian is not Hermitian");
  }
  return H;
}

StateVector fock_state(int n_modes, std::span<const int> modes) {
  FockBasis basis(n_modes);
  check_modes(n_modes, modes);
  StateVector v = StateVector::Zero(basis.dimension());
  unsigned occ = 0;
  double sign = 1.0;
  // Apply c† from the rightmost factor inwards.
  for (auto it = modes.rbegin(); it != modes.rend(); ++it) {
    const unsigned bit = 1u << *it;
    if (occ & bit) return v;
    sign *= jordan_wigner_sign(occ, *it);
    occ |= bit;
  }
  v[occ] = sign;
  return v;
}

DensityMatrix pure_density(const StateVector& psi) { return psi * psi.adjoint(); }

ExactEvolver::ExactEvolver(const ModeHamiltonian& h) : hbar_(h.hbar) {
  hamiltonian_ = hamiltonian_matrix(h, build_fock_operators(h.n_modes));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hamiltonian_);
  energies_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

DensityMatrix ExactEvolver::evolve(const DensityMatrix& rho0, double t) const {
  if (rho0.rows() != hamiltonian_.rows() || rho0.cols() != hamiltonian_.cols()) {
    throw ConfigurationError("density matrix dimension does not match Hamiltonian");
  }
  Eigen::VectorXcd phases(energies_.size());
  for (Eigen::Index i = 0; i < energies_.size(); ++i) {
    phases[i] = std::polar(1.0, -energies_[i] * t / hbar_);
  }
  const Eigen::MatrixXcd U = eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
  return U * rho0 * U.adjoint();
}

DensityMatrix evolve_exact(const ModeHamiltonian& h, const DensityMatrix& rho0, double t) {
  return ExactEvolver(h).evolve(rho0, t);
}

std::complex<double> exact_coherence(const DensityMatrix& rho, std::span<const int> bra,
                                     std::span<const int> ket) {
  const int n = std::countr_zero(static_cast<unsigned>(rho.rows()));
  const StateVector b = fock_state(n, bra);
  const StateVector k = fock_state(n, ket);
  if (b.isZero() || k.isZero()) return {};
  return b.dot(rho * k);  // dot conjugates the first argument
}

MomentTensor exact_moment_tensor(const DensityMatrix& rho, int order) {
  const int n = std::countr_zero(static_cast<unsigned>(rho.rows()));
  MomentTensor M(order, n);
  std::vector<int> idx(static_cast<std::size_t>(2 * order), 0);
  for (std::size_t flat = 0; flat < M.size(); ++flat) {
    std::size_t rest = flat;
    for (int k = 2 * order - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
    }
    const std::span<const int> all(idx);
    M[flat] = exact_coherence(rho, all.first(static_cast<std::size_t>(order)),
                              all.subspan(static_cast<std::size_t>(order)));
  }
  return M;
}

}  // namespace fermiphase::fock
