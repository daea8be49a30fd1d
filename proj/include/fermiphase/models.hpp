#pragma once

// Grid discretization of the two-component contact model and the multi-component kernel model
// into drift matrices and point-local noise matrices.

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fermiphase/mode_hamiltonian.hpp"

namespace fermiphase {

using Complex = std::complex<double>;

/// Periodic cubic grid with M points per axis.  Point index r = x_0 + M x_1 + M² x_2.
struct GridSpec {
  int dimension = 1;
  int points_per_axis = 2;
  double spacing = 1.0;

  void validate() const;
  int point_count() const;
  double cell_volume() const;
  double length() const { return points_per_axis * spacing; }
  std::array<int, 3> coordinates(int point) const;
  int point_index(const std::array<int, 3>& coords) const;
  /// Position of a point, x_i = n_i Δx.
  std::array<double, 3> position(int point) const;
  /// Reciprocal-lattice wavevector of FFT index `point`, folded into (−π/Δx, π/Δx].
  std::array<double, 3> wavevector(int point) const;
};

enum class PotentialKind { none, harmonic, sin2, tabulated };

/// Closed-form presets or tabulated per-point values (energy units).
struct PotentialSpec {
  PotentialKind kind = PotentialKind::none;
  double omega = 0.0;                   // harmonic: ½ m ω² |x − centre|², centre = L/2 per axis
  double depth = 0.0;                   // sin²: V0 Σ_axes sin²(k_L x)
  double lattice_wavevector = 0.0;
  std::vector<double> values;           // tabulated

  std::vector<double> sample(const GridSpec& grid, double mass) const;
};

struct TwoComponentModel {
  double mass = 1.0;
  double hbar = 1.0;
  std::vector<double> potential_up;    // per grid point
  std::vector<double> potential_down;
  double coupling = 0.0;               // g (energy · volume)
};

struct MultiComponentModel {
  int components = 1;
  double mass = 1.0;
  double hbar = 1.0;
  /// one_body[r](α, β) = V^{α;β}(r)
  std::vector<Eigen::MatrixXd> one_body;
  /// V^{αβ;γδ}(r,s) stored at two_body_index(α,β,γ,δ,r,s); empty means no interaction.
  std::vector<double> two_body;

  std::size_t two_body_index(int a, int b, int c, int d, int r, int s, int points) const;
  double kernel(int a, int b, int c, int d, int r, int s, int points) const;
};

enum class Sector { psi, psi_plus };

struct NoiseTerm {
  int row = 0;
  int col = 0;
  Complex coefficient;
};

/// One Wiener channel: the sparse matrix K_a multiplying δw_a.
struct NoiseChannel {
  std::string label;
  std::vector<NoiseTerm> terms;
};

/// Drift and noise for Θ = I + L dt + Σ_a K_a δw_a over composite index (component, point),
/// flattened as component · points + point.
struct DriftNoiseCoefficients {
  GridSpec grid;
  int components = 0;
  double hbar = 1.0;
  double mass = 1.0;
  Eigen::SparseMatrix<double> kinetic;    // points × points, −ħ²/2m ∇² (3-point stencil)
  std::vector<Eigen::MatrixXd> local;     // per point, components × components
  std::vector<NoiseChannel> psi_noise;
  std::vector<NoiseChannel> psi_plus_noise;

  int dimension() const { return components * grid.point_count(); }
  int composite(int component, int point) const { return component * grid.point_count() + point; }
  int channel_count() const { return static_cast<int>(psi_noise.size() + psi_plus_noise.size()); }
  /// ψ channels come first in the global Wiener numbering, then ψ⁺ channels.
  int channel_offset(Sector s) const { return s == Sector::psi ? 0 : static_cast<int>(psi_noise.size()); }
  const std::vector<NoiseChannel>& noise(Sector s) const { return s == Sector::psi ? psi_noise : psi_plus_noise; }

  /// Single-particle Hamiltonian over composite indices.
  Eigen::SparseMatrix<double> one_body() const;
  /// L_ψ = −(i/ħ)H₁, L_ψ⁺ = +(i/ħ)H₁.
  Eigen::SparseMatrix<Complex> drift(Sector s) const;
  Eigen::MatrixXcd noise_matrix(Sector s, int channel) const;
  /// Σ_a K_a[p,r] K_a[q,s] stored densely at ((p·d + q)·d + r)·d + s.
  std::vector<Complex> noise_kernel(Sector s) const;
};

/// −ħ²/2m ∇² with a periodic 3-point stencil per axis.
Eigen::SparseMatrix<double> kinetic_stencil(const GridSpec& grid, double hbar, double mass);

DriftNoiseCoefficients discretize_two_component(const TwoComponentModel& model, const GridSpec& grid);

void validate_multi_component(const MultiComponentModel& model, const GridSpec& grid, double tol);

/// Q_{(α,γ,r),(β,δ,s)} = −(i/ħ) V^{αβ;γδ}(r,s), row index (α·C + γ)·points + r.
Eigen::MatrixXcd interaction_matrix(const MultiComponentModel& model, const GridSpec& grid);

DriftNoiseCoefficients discretize_multi_component(const MultiComponentModel& model, const GridSpec& grid,
                                                  double tol = 1e-10, int max_interaction_dimension = 4096);

/// Contact kernel in multi-component form: V^{ud;ud}(r,r) = V^{du;du}(r,r) = g/ΔV ("direct"), or
/// V^{ud;du}(r,r) = V^{du;ud}(r,r) = −g/ΔV ("exchange").  Both give (g/ΔV) n_u n_d per cell.
MultiComponentModel contact_as_multi_component(const TwoComponentModel& model, const GridSpec& grid,
                                               bool exchange_form = false);

/// Mode Hamiltonians on grid modes (mode index = composite index) for the exact oracle and the
/// symbolic derivation.
ModeHamiltonian mode_hamiltonian(const TwoComponentModel& model, const GridSpec& grid);
ModeHamiltonian mode_hamiltonian(const MultiComponentModel& model, const GridSpec& grid);

}  // namespace fermiphase
