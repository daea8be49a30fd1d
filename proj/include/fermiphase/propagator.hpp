#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fermiphase/models.hpp"
#include "fermiphase/wiener.hpp"

namespace fermiphase {

enum class SchemeKind { euler, split_step_fourier, bloch_basis };

/// Kinetic energy used by the spectral schemes: the exact eigenvalues of the 3-point stencil
/// (matches the Euler and exact paths) or the continuum ħ²k²/2m.
enum class Dispersion { stencil, continuum };

struct StepScheme {
  SchemeKind kind = SchemeKind::euler;
  double dt = 1e-3;
  int steps = 0;
  Dispersion dispersion = Dispersion::stencil;

  void validate() const;
};

using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TrajectoryPropagator {
  RowMatrix T;       // ψ sector
  RowMatrix T_plus;  // ψ⁺ sector
  double time = 0.0;
  int steps = 0;
  bool divergent = false;

  static TrajectoryPropagator identity(int dimension);
};

struct ThetaPair {
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> psi;
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> psi_plus;
};

/// Θ = I + L dt + Σ_a K_a δw_a for both sectors (ψ channels first in the batch, then ψ⁺).
ThetaPair theta_step(const DriftNoiseCoefficients& coeffs, double dt, const WienerBatch& wiener);

/// Spectral single-particle Hamiltonian over composite indices: F† diag(ε_k) F per component plus
/// the local one-body part.
Eigen::MatrixXcd spectral_hamiltonian(const DriftNoiseCoefficients& coeffs, Dispersion dispersion);

/// ε_k for FFT index `point` of the grid.
double kinetic_energy(const GridSpec& grid, double hbar, double mass, int point, Dispersion dispersion);

/// Precomputed per-(coefficients, scheme) state, shared read-only between trajectories.
class Propagator {
 public:
  /// `channel_map` (optional, channel_count × n_source) turns n_source drawn increments into the
  /// increments fed to the channels: δw = channel_map · δw_drawn.
  Propagator(const DriftNoiseCoefficients& coeffs, StepScheme scheme,
             std::optional<Eigen::MatrixXd> channel_map = std::nullopt);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  const StepScheme& scheme() const { return scheme_; }
  int dimension() const { return dimension_; }
  int drawn_channels() const;

  /// Runs the trajectory; `observer(step, propagator)` is called for every step listed in
  /// `checkpoints` (ascending, 0 = initial).  Stops early, flagged divergent, on non-finite entries.
  using Observer = std::function<void(int, const TrajectoryPropagator&)>;
  TrajectoryPropagator propagate(std::uint64_t seed, std::uint64_t trajectory, std::span<const int> checkpoints = {},
                                 const Observer& observer = {}) const;

 private:
  friend ThetaPair theta_step(const DriftNoiseCoefficients&, double, const WienerBatch&);
  struct Sector;
  struct Fourier;
  void step(Sector const& sector, std::span<const double> increments, RowMatrix& T, RowMatrix& scratch) const;

  StepScheme scheme_;
  int dimension_ = 0;
  int components_ = 0;
  int points_ = 0;
  int channels_ = 0;
  std::optional<Eigen::MatrixXd> channel_map_;
  std::unique_ptr<Sector> psi_;
  std::unique_ptr<Sector> psi_plus_;
  std::unique_ptr<Fourier> fourier_;
};

TrajectoryPropagator propagate_trajectory(const DriftNoiseCoefficients& coeffs, const StepScheme& scheme,
                                          std::uint64_t seed, std::uint64_t trajectory);

}  // namespace fermiphase
