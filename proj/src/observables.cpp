#include "fermiphase/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fermiphase/error.hpp"

namespace fermiphase {

namespace {

bool has_repeat(const TensorLayout& layout, std::span<const Slot> slots) {
  for (std::size_t i = 0; i < slots.size(); ++i)
    for (std::size_t j = i + 1; j < slots.size(); ++j)
      if (layout.composite(slots[i]) == layout.composite(slots[j])) return true;
  return false;
}

std::vector<int> composites(const TensorLayout& layout, std::span<const Slot> slots) {
  std::vector<int> out;
  for (const auto& s : slots) out.push_back(layout.composite(s));
  return out;
}

Estimate read(const EnsembleEstimate& m, const TensorLayout& layout, std::span<const Slot> psi,
              std::span<const Slot> psi_plus, double scale) {
  if (static_cast<int>(psi.size()) != m.mean.order() || static_cast<int>(psi_plus.size()) != m.mean.order()) {
    throw ConfigurationError("observable order " + std::to_string(psi.size()) + " does not match tensor order " +
                             std::to_string(m.mean.order()));
  }
  if (m.mean.dimension() != layout.dimension()) throw ConfigurationError("tensor dimension does not match layout");
  if (has_repeat(layout, psi) || has_repeat(layout, psi_plus)) return {};
  const auto a = composites(layout, psi), b = composites(layout, psi_plus);
  const std::size_t flat = m.mean.flat_index(a, b);
  Estimate e{m.mean[flat] * scale, 0.0, 0.0};
  if (!m.stderr_re.empty()) {
    e.stderr_re = m.stderr_re[flat] * scale;
    e.stderr_im = m.stderr_im[flat] * scale;
  }
  return e;
}

// Determinant of the p×p matrix u(m_i, t_j).
Complex slater(const Eigen::MatrixXcd& u, std::span<const int> rows, std::span<const int> cols) {
  const auto p = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXcd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = u(rows[i], cols[j]);
  return p == 0 ? Complex(1.0) : a.determinant();
}

}  // namespace

int TensorLayout::composite(const Slot& s) const {
  const int P = grid.point_count();
  if (s.component < 0 || s.component >= components || s.index < 0 || s.index >= P) {
    throw ValidationError("slot (" + std::to_string(s.component) + ", " + std::to_string(s.index) +
                          ") outside the grid");
  }
  return s.component * P + s.index;
}

Eigen::MatrixXcd psi_momentum_transform(const TensorLayout& layout) {
  const GridSpec& g = layout.grid;
  const int P = g.point_count();
  const double norm = std::sqrt(g.cell_volume() / P);
  Eigen::MatrixXcd block(P, P);
  for (int k = 0; k < P; ++k) {
    const auto kv = g.wavevector(k);
    for (int r = 0; r < P; ++r) {
      const auto x = g.position(r);
      double phase = 0.0;
      for (int a = 0; a < g.dimension; ++a) phase += kv[a] * x[a];
      block(k, r) = std::polar(norm, -phase);
    }
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(layout.dimension(), layout.dimension());
  for (int c = 0; c < layout.components; ++c) out.block(c * P, c * P, P, P) = block;
  return out;
}

Eigen::MatrixXcd psi_plus_momentum_transform(const TensorLayout& layout) {
  return psi_momentum_transform(layout).conjugate();
}

int momentum_index(const GridSpec& grid, const std::array<double, 3>& k, double tol) {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    if (a >= grid.dimension) {
      if (k[a] != 0.0) throw ValidationError("momentum has components beyond the grid dimension");
      continue;
    }
    const double n = k[a] * grid.length() / (2.0 * std::numbers::pi);
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > tol) {
      throw ValidationError("momentum " + std::to_string(k[a]) + " is not on the reciprocal lattice (spacing " +
                            std::to_string(2.0 * std::numbers::pi / grid.length()) + ")");
    }
    c[a] = static_cast<int>(rounded);
  }
  return grid.point_index(c);
}

MomentTensor transform_moment(const MomentTensor& m, const Eigen::MatrixXcd& psi, const Eigen::MatrixXcd& psi_plus) {
  const int p = m.order();
  std::vector<int> extents(static_cast<std::size_t>(2 * p), m.dimension());
  std::vector<Complex> data(m.data().begin(), m.data().end());
  for (int axis = 0; axis < 2 * p; ++axis) data = apply_along_axis(data, extents, axis, axis < p ? psi : psi_plus);
  MomentTensor out(p, static_cast<int>(psi.rows()));
  std::copy(data.begin(), data.end(), out.data().begin());
  return out;
}

MomentAccumulator::MomentAccumulator(MomentTensor initial, Basis basis, const TensorLayout& layout,
                                     std::size_t max_bytes)
    : initial_(std::move(initial)), basis_(basis), stats_(initial_.size()) {
  if (initial_.dimension() != layout.dimension()) {
    throw ConfigurationError("initial tensor dimension " + std::to_string(initial_.dimension()) +
                             " does not match propagator dimension " + std::to_string(layout.dimension()));
  }
  if (initial_.size() * sizeof(Complex) * 3 > max_bytes) {
    throw ConfigurationError("moment tensor of order " + std::to_string(initial_.order()) + " over " +
                             std::to_string(initial_.dimension()) + " indices exceeds the memory bound");
  }
  if (basis_ == Basis::momentum) {
    psi_transform_ = psi_momentum_transform(layout);
    psi_plus_transform_ = psi_plus_momentum_transform(layout);
  }
}

void MomentAccumulator::add(const TrajectoryPropagator& t) {
  if (t.divergent) {
    ++excluded_;
    return;
  }
  if (t.T.rows() != initial_.dimension()) throw ConfigurationError("propagator dimension mismatch");
  Eigen::MatrixXcd a = t.T, b = t.T_plus;
  if (basis_ == Basis::momentum) {
    a = psi_transform_ * a;
    b = psi_plus_transform_ * b;
  }
  const MomentTensor m = transform_moment(initial_, a, b);
  stats_.add(m.data());
}

EnsembleEstimate MomentAccumulator::estimate() const {
  EnsembleEstimate e;
  e.mean = MomentTensor(initial_.order(), initial_.dimension());
  std::copy(stats_.mean().begin(), stats_.mean().end(), e.mean.data().begin());
  e.stderr_re.resize(stats_.size());
  e.stderr_im.resize(stats_.size());
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    e.stderr_re[i] = stats_.stderr_re(i);
    e.stderr_im[i] = stats_.stderr_im(i);
  }
  e.n_traj = stats_.count();
  e.n_excluded = excluded_;
  e.basis = basis_;
  return e;
}

EnsembleEstimate evolve_moment(const MomentTensor& M0, std::span<const TrajectoryPropagator> trajectories,
                               const TensorLayout& layout, Basis basis, std::size_t max_bytes) {
  if (trajectories.empty()) throw ConfigurationError("evolve_moment needs at least one trajectory");
  MomentAccumulator acc(M0, basis, layout, max_bytes);
  for (const auto& t : trajectories) acc.add(t);
  return acc.estimate();
}

PopulationEstimate position_population(const EnsembleEstimate& m, const TensorLayout& layout,
                                       std::span<const Slot> slots) {
  if (m.basis != Basis::position) throw ConfigurationError("position population needs a position-basis estimate");
  const double scale = std::pow(layout.grid.cell_volume(), static_cast<double>(slots.size()));
  const Estimate e = read(m, layout, slots, slots, scale);
  return {e.value.real(), e.stderr_re, e.value.imag()};
}

Estimate position_coherence(const EnsembleEstimate& m, const TensorLayout& layout, std::span<const Slot> bra,
                            std::span<const Slot> ket) {
  if (m.basis != Basis::position) throw ConfigurationError("position coherence needs a position-basis estimate");
  if (bra.size() != ket.size()) throw ConfigurationError("bra and ket need the same particle number");
  return read(m, layout, bra, ket, std::pow(layout.grid.cell_volume(), static_cast<double>(bra.size())));
}

Estimate momentum_fock_coherence(const EnsembleEstimate& m, const TensorLayout& layout, std::span<const Slot> bra,
                                 std::span<const Slot> ket) {
  if (m.basis != Basis::momentum) throw ConfigurationError("momentum coherence needs a momentum-basis estimate");
  if (bra.size() != ket.size()) throw ConfigurationError("bra and ket need the same particle number");
  return read(m, layout, bra, ket, 1.0);
}

Eigen::MatrixXcd grid_mode_functions(const TensorLayout& layout) {
  return Eigen::MatrixXcd::Identity(layout.dimension(), layout.dimension()) / std::sqrt(layout.grid.cell_volume());
}

MomentTensor initial_moments(std::span<const StateTerm> terms, Basis basis, const TensorLayout& layout) {
  if (terms.empty()) throw ValidationError("initial state needs at least one term");
  const std::size_t p = terms.front().modes.size();
  if (p == 0) throw ValidationError("initial state terms need at least one mode");
  for (const auto& t : terms) {
    if (t.modes.size() != p) throw ValidationError("initial state terms have mixed particle numbers");
  }
  const int dim = layout.dimension();
  // Columns of u: basis modes expressed on grid modes.
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
  if (basis == Basis::momentum) {
    u = psi_plus_momentum_transform(layout).transpose() / std::sqrt(layout.grid.cell_volume());
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < p; ++i) count *= static_cast<std::size_t>(dim);
  std::vector<Complex> amplitude(count);
  std::vector<int> m(p);
  for (const auto& t : terms) {
    const auto cols = composites(layout, t.modes);
    if (has_repeat(layout, t.modes)) continue;
    for (std::size_t flat = 0; flat < count; ++flat) {
      std::size_t rest = flat;
      for (std::size_t i = p; i-- > 0;) {
        m[i] = static_cast<int>(rest % static_cast<std::size_t>(dim));
        rest /= static_cast<std::size_t>(dim);
      }
      amplitude[flat] += t.amplitude * slater(u, m, cols);
    }
  }
  // ⟨Ψ|Ψ⟩ = Σ over ordered tuples / p!
  double norm = 0.0;
  for (const auto& a : amplitude) norm += std::norm(a);
  double factorial = 1.0;
  for (std::size_t i = 2; i <= p; ++i) factorial *= static_cast<double>(i);
  norm /= factorial;
  if (!(norm > 0.0)) throw ValidationError("initial state has zero norm");
  MomentTensor out(static_cast<int>(p), dim);
  const double scale = 1.0 / (norm * std::pow(layout.grid.cell_volume(), static_cast<double>(p)));
  for (std::size_t a = 0; a < count; ++a) {
    if (amplitude[a] == Complex{}) continue;
    for (std::size_t b = 0; b < count; ++b) out[a * count + b] = amplitude[a] * std::conj(amplitude[b]) * scale;
  }
  return out;
}

}  // namespace fermiphase
