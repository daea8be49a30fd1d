#include "fermiphase/propagator.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include <fftw3.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "fermiphase/error.hpp"

namespace fermiphase {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool all_finite(const RowMatrix& m) {
  const Complex* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(p[i].real()) || !std::isfinite(p[i].imag())) return false;
  }
  return true;
}

}  // namespace

void StepScheme::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("scheme.dt must be positive");
  if (steps < 0) throw ValidationError("scheme.steps must be non-negative");
}

TrajectoryPropagator TrajectoryPropagator::identity(int dimension) {
  TrajectoryPropagator t;
  t.T = RowMatrix::Identity(dimension, dimension);
  t.T_plus = RowMatrix::Identity(dimension, dimension);
  return t;
}

double kinetic_energy(const GridSpec& grid, double hbar, double mass, int point, Dispersion dispersion) {
  const auto k = grid.wavevector(point);
  double e = 0.0;
  for (int a = 0; a < grid.dimension; ++a) {
    if (dispersion == Dispersion::stencil) {
      e += (2.0 - 2.0 * std::cos(k[a] * grid.spacing)) / (grid.spacing * grid.spacing);
    } else {
      e += k[a] * k[a];
    }
  }
  return hbar * hbar / (2.0 * mass) * e;
}

Eigen::MatrixXcd spectral_hamiltonian(const DriftNoiseCoefficients& c, Dispersion dispersion) {
  const int P = c.grid.point_count();
  Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(P, P);
  for (int k = 0; k < P; ++k) {
    const double e = kinetic_energy(c.grid, c.hbar, c.mass, k, dispersion);
    const auto kv = c.grid.wavevector(k);
    for (int r = 0; r < P; ++r) {
      const auto xr = c.grid.position(r);
      for (int s = 0; s < P; ++s) {
        const auto xs = c.grid.position(s);
        double phase = 0.0;
        for (int a = 0; a < c.grid.dimension; ++a) phase += kv[a] * (xr[a] - xs[a]);
        block(r, s) += e * std::polar(1.0 / P, phase);
      }
    }
  }
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(c.dimension(), c.dimension());
  for (int comp = 0; comp < c.components; ++comp) h.block(comp * P, comp * P, P, P) = block;
  for (int r = 0; r < P; ++r)
    for (int a = 0; a < c.components; ++a)
      for (int b = 0; b < c.components; ++b) h(c.composite(a, r), c.composite(b, r)) += c.local[r](a, b);
  return h;
}

// Sparse factor applied after the deterministic part of a step: base values plus, for each
// nonzero, the noise channels that feed it.
struct Propagator::Sector {
  std::vector<int> row_start;
  std::vector<int> cols;
  std::vector<Complex> base;
  std::vector<int> noise_start;
  std::vector<std::pair<int, Complex>> noise;
  std::vector<Complex> phases;  // split-step kinetic factor per FFT index, 1/P included
  RowMatrix dense;              // bloch-basis deterministic step

  void values(std::span<const double> increments, std::vector<Complex>& out) const {
    out.resize(base.size());
    for (std::size_t nz = 0; nz < base.size(); ++nz) {
      Complex v = base[nz];
      for (int j = noise_start[nz]; j < noise_start[nz + 1]; ++j) v += noise[j].second * increments[noise[j].first];
      out[nz] = v;
    }
  }
};

struct Propagator::Fourier {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Fourier() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

namespace {

using SectorData = std::map<std::pair<int, int>, std::pair<Complex, std::vector<std::pair<int, Complex>>>>;

void add_noise(SectorData& data, const DriftNoiseCoefficients& c, fermiphase::Sector s) {
  const int offset = c.channel_offset(s);
  const auto& channels = c.noise(s);
  for (std::size_t a = 0; a < channels.size(); ++a) {
    for (const auto& t : channels[a].terms) {
      data[{t.row, t.col}].second.emplace_back(offset + static_cast<int>(a), t.coefficient);
    }
  }
}

}  // namespace

Propagator::Propagator(const DriftNoiseCoefficients& c, StepScheme scheme, std::optional<Eigen::MatrixXd> channel_map)
    : scheme_(scheme),
      dimension_(c.dimension()),
      components_(c.components),
      points_(c.grid.point_count()),
      channels_(c.channel_count()),
      channel_map_(std::move(channel_map)) {
  scheme_.validate();
  c.grid.validate();
  if (channel_map_ && channel_map_->rows() != channels_) {
    throw ConfigurationError("channel map has " + std::to_string(channel_map_->rows()) + " rows, expected " +
                             std::to_string(channels_));
  }
  const double dt = scheme_.dt;
  for (fermiphase::Sector s : {fermiphase::Sector::psi, fermiphase::Sector::psi_plus}) {
    const double sign = s == fermiphase::Sector::psi ? -1.0 : 1.0;
    SectorData data;
    switch (scheme_.kind) {
      case SchemeKind::euler: {
        const Eigen::SparseMatrix<Complex> L = c.drift(s);
        for (int i = 0; i < dimension_; ++i) data[{i, i}].first = 1.0;
        for (int k = 0; k < L.outerSize(); ++k)
          for (Eigen::SparseMatrix<Complex>::InnerIterator it(L, k); it; ++it)
            data[{static_cast<int>(it.row()), static_cast<int>(it.col())}].first += it.value() * dt;
        break;
      }
      case SchemeKind::split_step_fourier: {
        const Complex factor(0.0, sign * dt / c.hbar);
        for (int r = 0; r < points_; ++r) {
          const Eigen::MatrixXcd u = (c.local[r].cast<Complex>() * factor).exp();
          for (int a = 0; a < components_; ++a)
            for (int b = 0; b < components_; ++b)
              if (u(a, b) != Complex{} || a == b) data[{c.composite(a, r), c.composite(b, r)}].first = u(a, b);
        }
        break;
      }
      case SchemeKind::bloch_basis:
        for (int i = 0; i < dimension_; ++i) data[{i, i}].first = 1.0;
        break;
    }
    add_noise(data, c, s);
    auto sector = std::make_unique<Sector>();
    sector->row_start.assign(static_cast<std::size_t>(dimension_) + 1, 0);
    sector->noise_start.push_back(0);
    for (const auto& [rc, v] : data) {
      ++sector->row_start[rc.first + 1];
      sector->cols.push_back(rc.second);
      sector->base.push_back(v.first);
      for (const auto& n : v.second) sector->noise.push_back(n);
      sector->noise_start.push_back(static_cast<int>(sector->noise.size()));
    }
    for (int i = 0; i < dimension_; ++i) sector->row_start[i + 1] += sector->row_start[i];

    if (scheme_.kind == SchemeKind::split_step_fourier) {
      for (int k = 0; k < points_; ++k) {
        const double e = kinetic_energy(c.grid, c.hbar, c.mass, k, scheme_.dispersion);
        sector->phases.push_back(std::polar(1.0 / points_, sign * e * dt / c.hbar));
      }
    } else if (scheme_.kind == SchemeKind::bloch_basis) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(spectral_hamiltonian(c, scheme_.dispersion));
      Eigen::VectorXcd ph(dimension_);
      for (int i = 0; i < dimension_; ++i) ph[i] = std::polar(1.0, sign * eig.eigenvalues()[i] * dt / c.hbar);
      sector->dense = eig.eigenvectors() * ph.asDiagonal() * eig.eigenvectors().adjoint();
    }
    (s == fermiphase::Sector::psi ? psi_ : psi_plus_) = std::move(sector);
  }

  if (scheme_.kind == SchemeKind::split_step_fourier) {
    fourier_ = std::make_unique<Fourier>();
    std::vector<int> n(static_cast<std::size_t>(c.grid.dimension), c.grid.points_per_axis);
    std::vector<Complex> buffer(static_cast<std::size_t>(points_) * dimension_);
    auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
    std::lock_guard lock(planner_mutex());
    for (int dir : {FFTW_FORWARD, FFTW_BACKWARD}) {
      fftw_plan p = fftw_plan_many_dft(c.grid.dimension, n.data(), dimension_, data, nullptr, dimension_, 1, data,
                                       nullptr, dimension_, 1, dir, FFTW_ESTIMATE | FFTW_UNALIGNED);
      if (!p) throw ConfigurationError("FFT plan creation failed");
      (dir == FFTW_FORWARD ? fourier_->forward : fourier_->backward) = p;
    }
  }
}

Propagator::~Propagator() = default;

int Propagator::drawn_channels() const {
  return channel_map_ ? static_cast<int>(channel_map_->cols()) : channels_;
}

void Propagator::step(const Sector& sector, std::span<const double> increments, RowMatrix& T,
                      RowMatrix& scratch) const {
  if (scheme_.kind == SchemeKind::split_step_fourier) {
    for (int comp = 0; comp < components_; ++comp) {
      Complex* block = T.data() + static_cast<std::ptrdiff_t>(comp) * points_ * dimension_;
      auto* f = reinterpret_cast<fftw_complex*>(block);
      fftw_execute_dft(fourier_->forward, f, f);
      for (int k = 0; k < points_; ++k) {
        Complex* row = block + static_cast<std::ptrdiff_t>(k) * dimension_;
        const Complex ph = sector.phases[k];
        for (int j = 0; j < dimension_; ++j) row[j] *= ph;
      }
      fftw_execute_dft(fourier_->backward, f, f);
    }
  } else if (scheme_.kind == SchemeKind::bloch_basis) {
    scratch.noalias() = sector.dense * T;
    T.swap(scratch);
  }
  thread_local std::vector<Complex> values;
  sector.values(increments, values);
  for (int i = 0; i < dimension_; ++i) {
    auto out = scratch.row(i);
    out.setZero();
    for (int nz = sector.row_start[i]; nz < sector.row_start[i + 1]; ++nz) out += values[nz] * T.row(sector.cols[nz]);
  }
  T.swap(scratch);
}

TrajectoryPropagator Propagator::propagate(std::uint64_t seed, std::uint64_t trajectory,
                                           std::span<const int> checkpoints, const Observer& observer) const {
  TrajectoryPropagator tp = TrajectoryPropagator::identity(dimension_);
  RowMatrix scratch(dimension_, dimension_);
  std::vector<double> drawn(static_cast<std::size_t>(drawn_channels()));
  std::vector<double> mapped(static_cast<std::size_t>(channels_));
  std::size_t next = 0;
  auto visit = [&](int step) {
    while (next < checkpoints.size() && checkpoints[next] < step) ++next;
    if (next < checkpoints.size() && checkpoints[next] == step) {
      if (!all_finite(tp.T) || !all_finite(tp.T_plus)) {
        tp.divergent = true;
        return;
      }
      if (observer) observer(step, tp);
      ++next;
    }
  };
  visit(0);
  for (int n = 1; n <= scheme_.steps && !tp.divergent; ++n) {
    fill_wiener(seed, trajectory, static_cast<std::uint64_t>(n), scheme_.dt, drawn);
    std::span<const double> inc = drawn;
    if (channel_map_) {
      Eigen::Map<Eigen::VectorXd>(mapped.data(), channels_).noalias() =
          *channel_map_ * Eigen::Map<const Eigen::VectorXd>(drawn.data(), static_cast<Eigen::Index>(drawn.size()));
      inc = mapped;
    }
    step(*psi_, inc, tp.T, scratch);
    step(*psi_plus_, inc, tp.T_plus, scratch);
    tp.steps = n;
    tp.time = n * scheme_.dt;
    visit(n);
  }
  if (!tp.divergent && (!all_finite(tp.T) || !all_finite(tp.T_plus))) tp.divergent = true;
  return tp;
}

ThetaPair theta_step(const DriftNoiseCoefficients& coeffs, double dt, const WienerBatch& wiener) {
  if (static_cast<int>(wiener.increments.size()) != coeffs.channel_count()) {
    throw ConfigurationError("Wiener batch has " + std::to_string(wiener.increments.size()) + " channels, expected " +
                             std::to_string(coeffs.channel_count()));
  }
  if (wiener.dt != dt) throw ConfigurationError("Wiener batch variance does not match dt");
  const Propagator p(coeffs, StepScheme{SchemeKind::euler, dt, 1});
  const TrajectoryPropagator id = TrajectoryPropagator::identity(coeffs.dimension());
  ThetaPair out;
  RowMatrix t, scratch(coeffs.dimension(), coeffs.dimension());
  t = id.T;
  p.step(*p.psi_, wiener.increments, t, scratch);
  out.psi = t.sparseView(0.0, 0.0);
  t = id.T_plus;
  p.step(*p.psi_plus_, wiener.increments, t, scratch);
  out.psi_plus = t.sparseView(0.0, 0.0);
  return out;
}

TrajectoryPropagator propagate_trajectory(const DriftNoiseCoefficients& coeffs, const StepScheme& scheme,
                                          std::uint64_t seed, std::uint64_t trajectory) {
  return Propagator(coeffs, scheme).propagate(seed, trajectory);
}

}  // namespace fermiphase
