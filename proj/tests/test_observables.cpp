#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fermiphase/correspondence.hpp"
#include "fermiphase/error.hpp"
#include "fermiphase/observables.hpp"
#include "model_fixtures.hpp"
#include "support.hpp"

using namespace fermiphase;

namespace {

TensorLayout free_layout(int m, double dx, int comps = 1) { return {GridSpec{1, m, dx}, comps}; }

DriftNoiseCoefficients free_single(int m, double dx) {
  MultiComponentModel mm;
  mm.components = 1;
  mm.one_body.assign(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(1, 1));
  return discretize_multi_component(mm, GridSpec{1, m, dx});
}

double max_diff(const MomentTensor& a, const MomentTensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("identity propagators leave the tensor unchanged") {
  const auto layout = free_layout(3, 0.5);
  const std::vector<StateTerm> st{{1.0, {{0, 1}}}, {Complex(0, 1), {{0, 2}}}};
  const auto m0 = initial_moments(st, Basis::position, layout);
  std::vector<TrajectoryPropagator> ts(5, TrajectoryPropagator::identity(3));
  const auto e = evolve_moment(m0, ts, layout);
  CHECK(max_diff(e.mean, m0) == 0.0);
  for (double s : e.stderr_re) CHECK(s == 0.0);
  CHECK(e.n_traj == 5);
  CHECK_THROWS_AS(evolve_moment(m0, std::span<const TrajectoryPropagator>{}, layout), ConfigurationError);
  CHECK_THROWS_AS(evolve_moment(m0, ts, layout, Basis::position, 16), ConfigurationError);
}

TEST_CASE("order one: M = T M0 T+^T") {
  std::mt19937_64 rng(73);
  const auto layout = free_layout(4, 1.0);
  MomentTensor m0(1, 4);
  for (auto& x : m0.data()) x = testsupport::random_complex(rng);
  TrajectoryPropagator t = TrajectoryPropagator::identity(4);
  t.T = testsupport::random_matrix(4, 4, rng);
  t.T_plus = testsupport::random_matrix(4, 4, rng);
  const auto e = evolve_moment(m0, std::span(&t, 1), layout);
  const Eigen::MatrixXcd M0 = Eigen::Map<const Eigen::Matrix<Complex, 4, 4, Eigen::RowMajor>>(m0.data().data());
  const Eigen::MatrixXcd expected = Eigen::MatrixXcd(t.T) * M0 * Eigen::MatrixXcd(t.T_plus).transpose();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const std::array<int, 1> a{i}, b{j};
      CHECK(std::abs(e.mean.at(a, b) - expected(i, j)) <= 1e-12);
    }
}

TEST_CASE("antisymmetry survives evolution") {
  std::mt19937_64 rng(79);
  const auto layout = free_layout(3, 1.0);
  const std::vector<StateTerm> st{{0.6, {{0, 0}, {0, 1}}}, {Complex(0.2, 0.5), {{0, 2}, {0, 1}}}};
  const auto m0 = initial_moments(st, Basis::position, layout);
  TrajectoryPropagator t = TrajectoryPropagator::identity(3);
  t.T = testsupport::random_matrix(3, 3, rng);
  t.T_plus = testsupport::random_matrix(3, 3, rng);
  const auto e = evolve_moment(m0, std::span(&t, 1), layout);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const std::array<int, 2> ab{a, b}, ba{b, a}, cd{c, d}, dc{d, c};
          CHECK(std::abs(e.mean.at(ab, cd) + e.mean.at(ba, cd)) <= 1e-12);
          CHECK(std::abs(e.mean.at(ab, cd) + e.mean.at(ab, dc)) <= 1e-12);
        }
}

TEST_CASE("populations and coherences of simple states") {
  const auto layout = free_layout(4, 0.5);
  const std::vector<StateTerm> vac{{1.0, {{0, 0}}}};
  MomentTensor zero(1, 4);
  EnsembleEstimate e{zero, std::vector<double>(16), std::vector<double>(16), 1, 0, Basis::position};
  const std::array<Slot, 1> r0{{{0, 0}}};
  CHECK(position_population(e, layout, r0).value == 0.0);

  // one particle in the k = 1 momentum mode: population 1/P at every point
  const std::vector<StateTerm> k1{{1.0, {{0, 1}}}};
  e.mean = initial_moments(k1, Basis::momentum, layout);
  for (int r = 0; r < 4; ++r) {
    const std::array<Slot, 1> s{{{0, r}}};
    CHECK(position_population(e, layout, s).value == doctest::Approx(0.25));
  }
  // (|1⟩ + |2⟩)/√2 on grid modes
  const std::vector<StateTerm> sup{{1.0, {{0, 1}}}, {1.0, {{0, 2}}}};
  e.mean = initial_moments(sup, Basis::position, layout);
  const std::array<Slot, 1> p1{{{0, 1}}}, p2{{{0, 2}}};
  CHECK(std::abs(position_coherence(e, layout, p1, p2).value - 0.5) <= 1e-14);
  CHECK(std::abs(position_coherence(e, layout, p1, p1).value.real() - position_population(e, layout, p1).value) <= 1e-15);

  // two particles: swap and duplicate
  const std::vector<StateTerm> two{{1.0, {{0, 0}, {0, 3}}}};
  e.mean = initial_moments(two, Basis::position, layout);
  e.stderr_re.assign(e.mean.size(), 0.0);
  e.stderr_im.assign(e.mean.size(), 0.0);
  const std::array<Slot, 2> a{{{0, 0}, {0, 3}}}, b{{{0, 3}, {0, 0}}}, dup{{{0, 0}, {0, 0}}};
  CHECK(position_population(e, layout, a).value == doctest::Approx(1.0));
  CHECK(position_coherence(e, layout, b, a).value == -position_coherence(e, layout, a, a).value);
  CHECK(position_population(e, layout, dup).value == 0.0);
}

TEST_CASE("initial moments agree with the phase-space oracle") {
  std::mt19937_64 rng(83);
  const TensorLayout layout{GridSpec{1, 2, 0.7}, 2};
  const std::vector<StateTerm> st{{testsupport::random_complex(rng), {{0, 0}, {1, 1}}},
                                  {testsupport::random_complex(rng), {{1, 0}, {0, 1}}},
                                  {testsupport::random_complex(rng), {{0, 1}, {0, 0}}}};
  const auto m0 = initial_moments(st, Basis::position, layout);
  fock::StateVector psi = fock::StateVector::Zero(16);
  for (const auto& t : st) {
    std::vector<int> modes;
    for (const auto& s : t.modes) modes.push_back(layout.composite(s));
    psi += t.amplitude * fock::fock_state(4, modes);
  }
  psi.normalize();
  const auto oracle = grassmann::moments_from_state(fock::pure_density(psi), 2, grid_mode_functions(layout));
  CHECK(max_diff(m0, oracle) <= 1e-12);
}

TEST_CASE("momentum read-out") {
  const auto layout = free_layout(8, 0.4);
  const auto grid = layout.grid;
  const int k0 = 3;
  const std::vector<StateTerm> st{{1.0, {{0, k0}}}};
  const auto m0 = initial_moments(st, Basis::momentum, layout);
  const auto c = free_single(8, 0.4);
  const Propagator p(c, {SchemeKind::split_step_fourier, 0.01, 200});
  std::vector<TrajectoryPropagator> ts{p.propagate(1, 0)};
  const auto e = evolve_moment(m0, ts, layout, Basis::momentum);
  const std::array<Slot, 1> s{{{0, k0}}};
  CHECK(std::abs(std::abs(momentum_fock_coherence(e, layout, s, s).value) - 1.0) <= 1e-10);
  const std::array<Slot, 1> other{{{0, 1}}};
  CHECK(std::abs(momentum_fock_coherence(e, layout, other, other).value) <= 1e-10);
  CHECK_THROWS_AS(position_population(e, layout, s), ConfigurationError);
  CHECK(momentum_index(grid, {grid.wavevector(5)[0], 0, 0}) == 5);
  CHECK_THROWS_AS(momentum_index(grid, {0.1, 0, 0}), ValidationError);
}

TEST_CASE("ensemble statistics merge consistently") {
  std::mt19937_64 rng(89);
  ComplexStats all(2), a(2), b(2);
  for (int i = 0; i < 1000; ++i) {
    const std::array<Complex, 2> x{testsupport::random_complex(rng), testsupport::random_complex(rng)};
    all.add(x);
    (i < 300 ? a : b).add(x);
  }
  a.merge(b);
  CHECK(std::abs(a.mean()[0] - all.mean()[0]) <= 1e-14);
  CHECK(a.stderr_re(1) == doctest::Approx(all.stderr_re(1)).epsilon(1e-12));
  CHECK(all.stderr_im(0) == doctest::Approx(1.0 / std::sqrt(1000.0)).epsilon(0.1));
}

TEST_CASE("ensemble output is independent of the worker count") {
  const auto c = discretize_two_component(testsupport::two_site_model(1.0), testsupport::two_site_grid());
  const Propagator p(c, {SchemeKind::euler, 1e-3, 100});
  const std::vector<int> cps{0, 50, 100};
  auto eval = [](std::size_t, const TrajectoryPropagator& t, std::span<Complex> out) {
    out[0] = t.T(0, 1) * t.T_plus(2, 3);
    out[1] = t.T(1, 1);
  };
  std::vector<EnsembleResult> results;
  for (int w : {1, 4, 8}) {
    EnsembleOptions o{1000, 5, 0.01, w, 64};
    results.push_back(run_ensemble(p, o, cps, 2, eval));
  }
  for (const auto& r : results) {
    CHECK(r.n_traj == 1000);
    for (std::size_t k = 0; k < cps.size(); ++k) {
      CHECK(r.checkpoints[k].mean() == results[0].checkpoints[k].mean());
      CHECK(r.checkpoints[k].stderr_re(0) == results[0].checkpoints[k].stderr_re(0));
    }
  }
  CHECK_THROWS_AS(run_ensemble(p, EnsembleOptions{0, 5}, cps, 2, eval), ValidationError);
}

TEST_CASE("divergence ceiling") {
  const auto c = discretize_two_component(testsupport::two_site_model(1e300), testsupport::two_site_grid());
  const Propagator p(c, {SchemeKind::euler, 1.0, 20});
  const std::vector<int> cps{20};
  const auto r = run_ensemble(p, EnsembleOptions{10, 1, 0.01, 1, 4}, cps, 1,
                              [](std::size_t, const TrajectoryPropagator& t, std::span<Complex> out) { out[0] = t.T(0, 0); });
  CHECK(r.n_excluded == 10);
  CHECK(r.aborted);
}
