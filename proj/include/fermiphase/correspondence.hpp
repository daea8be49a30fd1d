#pragma once

// B-distribution machinery on top of the exact Grassmann algebra: correspondence rules,
// distributions of Fock-space density matrices, phase-space moments, and symbolic extraction
// of drift/diffusion coefficients from a mode Hamiltonian.

#include <span>
#include <vector>

#include "fermiphase/fock.hpp"
#include "fermiphase/grassmann.hpp"
#include "fermiphase/mode_hamiltonian.hpp"
#include "fermiphase/moment_tensor.hpp"

namespace fermiphase::grassmann {

// Correspondence rules, each acting on the distribution F of an operator X:
//   c X  -> g F            X c  -> F ∂←/∂g⁺
//   c† X -> ∂→/∂g F        X c† -> F g⁺
GrassmannElement left_annihilation(const GrassmannElement& f, int mode);
GrassmannElement left_creation(const GrassmannElement& f, int mode);
GrassmannElement right_annihilation(const GrassmannElement& f, int mode);
GrassmannElement right_creation(const GrassmannElement& f, int mode);

/// Distribution of |0⟩⟨0|, normalized so that its full phase-space integral is 1.
GrassmannElement vacuum_distribution(GeneratorSet set);

/// B for a Fock-space operator, built by applying the correspondence rules to the vacuum
/// distribution for every |m⟩⟨l| component.
GrassmannElement distribution_from_state(const fock::DensityMatrix& rho);

/// ∫ dg⁺dg  g_{m_p}…g_{m_1} B g⁺_{l_1}…g⁺_{l_p}.
Complex phase_space_moment(const GrassmannElement& b, std::span<const int> psi_modes,
                           std::span<const int> psi_plus_modes);

/// Mode-basis moment tensor of a distribution.
MomentTensor distribution_moments(const GrassmannElement& b, int order);

/// Canonical initial moment tensor over field points: entries equal the coherences
/// Tr(|l⟩⟨m|ρ) transformed with `mode_functions` (rows = field points, columns = modes,
/// ψ(r) = Σ_i φ_i(r) g_i).  Orders beyond the available particle content give zeros.
MomentTensor moments_from_state(const fock::DensityMatrix& rho, int order,
                                const Eigen::MatrixXcd& mode_functions);

/// −(i/ħ)[H, ·] expressed on distribution coefficients via the correspondence rules.
LinearSuperOperator liouvillian(const ModeHamiltonian& h);

/// Drift A_p = Σ_r drift(p, r) g_r and diffusion D_pq = Σ_{r<s} diffusion(p,q,r,s) g_r g_s over
/// generator indices (ψ_i -> 2i, ψ⁺_i -> 2i+1).  The diffusion tensor is stored antisymmetric in
/// (p,q) and in (r,s).
struct FfpeCoefficients {
  GeneratorSet generators{0};
  Eigen::MatrixXcd drift;
  std::vector<Complex> diffusion_data;
  double residual = 0.0;
  int rank_deficiency = 0;

  explicit FfpeCoefficients(GeneratorSet set);

  Complex diffusion(int p, int q, int r, int s) const;
  void set_diffusion(int p, int q, int r, int s, Complex value);  // fills the antisymmetric partners

  /// Ito drift matrix (c-number coefficients of dg/dt), i.e. −A.
  Eigen::MatrixXcd ito_drift() const { return -drift; }
};

/// ∂B/∂t = −Σ_p ∂→_p(A_p B) + ½ Σ_pq (D_pq B)∂←_q∂←_p.  On even B the drift term coincides with
/// −Σ_p (A_p B)∂←_p; writing it with a left derivative keeps the same coefficients valid on odd B.
LinearSuperOperator ffpe_operator(const FfpeCoefficients& coefficients);

/// Matches liouvillian(h) against ffpe_operator over the whole coefficient basis and returns the
/// unique coefficients.  Throws StructuralError when the residual exceeds `tolerance`.
FfpeCoefficients symbolic_ffpe(const ModeHamiltonian& h, double tolerance = 1e-12);

}  // namespace fermiphase::grassmann
