#pragma once

// Moment-tensor evolution over trajectory ensembles and the population/coherence read-outs.
// Tensors are field-normalized: entries are densities, ψ(r) = Σ_i φ_i(r) g_i with grid modes
// φ_i(r) = δ_{ir}/√ΔV.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fermiphase/ensemble.hpp"
#include "fermiphase/models.hpp"
#include "fermiphase/moment_tensor.hpp"
#include "fermiphase/propagator.hpp"

namespace fermiphase {

enum class Basis { position, momentum };

/// A (component, index) slot; index is a grid point or an FFT momentum index.
struct Slot {
  int component = 0;
  int index = 0;
};

/// Layout shared by the readers: component count and grid.
struct TensorLayout {
  GridSpec grid;
  int components = 1;
  int dimension() const { return components * grid.point_count(); }
  int composite(const Slot& s) const;
};

struct EnsembleEstimate {
  MomentTensor mean;
  std::vector<double> stderr_re;
  std::vector<double> stderr_im;
  std::uint64_t n_traj = 0;
  std::uint64_t n_excluded = 0;
  Basis basis = Basis::position;
};

struct Estimate {
  Complex value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};

struct PopulationEstimate {
  double value = 0.0;
  double stderr = 0.0;
  double imaginary_residue = 0.0;
};

/// Plane-wave transforms over composite indices: rows are (component, k), columns (component, r).
/// psi_transform = e^{−ik·r}√ΔV/√P, psi_plus_transform = e^{+ik·r}√ΔV/√P.
Eigen::MatrixXcd psi_momentum_transform(const TensorLayout& layout);
Eigen::MatrixXcd psi_plus_momentum_transform(const TensorLayout& layout);

/// FFT index of a wavevector; throws ValidationError when k is off the reciprocal lattice.
int momentum_index(const GridSpec& grid, const std::array<double, 3>& k, double tol = 1e-9);

/// Applies `psi` to every ψ axis and `psi_plus` to every ψ⁺ axis.
MomentTensor transform_moment(const MomentTensor& m, const Eigen::MatrixXcd& psi, const Eigen::MatrixXcd& psi_plus);

/// Accumulates per-trajectory transformed tensors; usable one trajectory at a time.
class MomentAccumulator {
 public:
  MomentAccumulator(MomentTensor initial, Basis basis, const TensorLayout& layout,
                    std::size_t max_bytes = std::size_t{1} << 28);
  void add(const TrajectoryPropagator& trajectory);
  EnsembleEstimate estimate() const;

 private:
  MomentTensor initial_;
  Basis basis_;
  Eigen::MatrixXcd psi_transform_;
  Eigen::MatrixXcd psi_plus_transform_;
  ComplexStats stats_;
  std::uint64_t excluded_ = 0;
};

/// Ensemble average of T^{⊗p} ⊗ T⁺^{⊗p} applied to M0.  Divergent trajectories are excluded
/// and counted.
EnsembleEstimate evolve_moment(const MomentTensor& M0, std::span<const TrajectoryPropagator> trajectories,
                               const TensorLayout& layout, Basis basis = Basis::position,
                               std::size_t max_bytes = std::size_t{1} << 28);

/// Probability of one fermion in each listed slot: ΔV^p · M(r|r).
PopulationEstimate position_population(const EnsembleEstimate& m, const TensorLayout& layout,
                                       std::span<const Slot> slots);

/// ⟨bra|ρ|ket⟩ = Tr(|ket⟩⟨bra| ρ) = ΔV^p · M(bra|ket): bra slots sit on the ψ indices, ket
/// slots on the ψ⁺ indices.  Repeated slots give exactly 0.
Estimate position_coherence(const EnsembleEstimate& m, const TensorLayout& layout, std::span<const Slot> bra,
                            std::span<const Slot> ket);

/// Coherence ⟨k_bra|ρ|k_ket⟩ between momentum Fock states; needs a momentum-basis estimate.
Estimate momentum_fock_coherence(const EnsembleEstimate& m, const TensorLayout& layout, std::span<const Slot> bra,
                                 std::span<const Slot> ket);

/// One term a · c†_{m_1}…c†_{m_p}|0⟩ of an initial pure state; modes are composite indices in
/// the given basis.
struct StateTerm {
  Complex amplitude;
  std::vector<Slot> modes;
};

/// Field-normalized M0 of a pure state Σ_t a_t |t⟩: M(m|l) = A(m) conj(A(l)) / ΔV^p with
/// A(m) = ⟨m|Ψ⟩ in the grid-mode basis.  Throws ValidationError if the state has zero norm or
/// the terms have mixed particle numbers.  The state is normalized.
MomentTensor initial_moments(std::span<const StateTerm> terms, Basis basis, const TensorLayout& layout);

/// Grid-mode functions (composite points × composite modes) φ_i(r) = δ_{ir}/√ΔV.
Eigen::MatrixXcd grid_mode_functions(const TensorLayout& layout);

}  // namespace fermiphase
