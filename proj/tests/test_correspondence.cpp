#include <array>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "fermiphase/correspondence.hpp"
#include "fermiphase/error.hpp"
#include "support.hpp"

using namespace fermiphase;
using namespace fermiphase::grassmann;

namespace {

fock::DensityMatrix random_density(int n, std::mt19937_64& rng) {
  const int dim = 1 << n;
  const Eigen::MatrixXcd a = testsupport::random_matrix(dim, dim, rng);
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

double tensor_diff(const MomentTensor& a, const MomentTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ModeHamiltonian random_hamiltonian(int n, std::mt19937_64& rng) {
  ModeHamiltonian h(n, 0.9);
  const Eigen::MatrixXcd a = testsupport::random_matrix(n, n, rng);
  h.one_body = a + a.adjoint();
  // Hermitian pair w c†_a c†_b c_c c_d + conj(w) c†_d c†_c c_b c_a
  const std::complex<double> w = testsupport::random_complex(rng);
  h.two_body.push_back({0, 1, 1, 0, 0.7});
  if (n > 2) {
    h.two_body.push_back({0, 2, 1, 2, w});
    h.two_body.push_back({2, 1, 2, 0, std::conj(w)});
  }
  return h;
}

}  // namespace

TEST_CASE("vacuum distribution is normalized") {
  for (int n = 1; n <= 4; ++n) CHECK(std::abs(phase_space_integral(vacuum_distribution(GeneratorSet(n))) - 1.0) <= 1e-15);
}

TEST_CASE("distribution integrates to the vacuum coherence") {
  std::mt19937_64 rng(31);
  for (int n = 1; n <= 3; ++n) {
    const auto rho = random_density(n, rng);
    CHECK(std::abs(phase_space_integral(distribution_from_state(rho)) - rho(0, 0)) <= 1e-12);
  }
}

TEST_CASE("phase-space moments equal exact coherences for random states") {
  std::mt19937_64 rng(37);
  for (int n = 1; n <= 3; ++n) {
    const auto rho = random_density(n, rng);
    const auto b = distribution_from_state(rho);
    for (int p = 1; p <= n; ++p) {
      const auto phase = distribution_moments(b, p);
      const auto exact = fock::exact_moment_tensor(rho, p);
      CHECK(tensor_diff(phase, exact) <= 1e-12);
    }
  }
}

TEST_CASE("moments_from_state examples") {
  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(3, 3);
  const auto vacuum = fock::pure_density(fock::fock_state(3, std::span<const int>{}));
  CHECK(moments_from_state(vacuum, 1, identity).max_abs() == 0.0);

  const std::array<int, 1> k{1};
  const auto single = fock::pure_density(fock::fock_state(3, k));
  const auto m1 = moments_from_state(single, 1, identity);
  for (int m = 0; m < 3; ++m) {
    for (int l = 0; l < 3; ++l) {
      const std::array<int, 1> a{m}, b{l};
      CHECK(m1.at(a, b) == std::complex<double>(m == 1 && l == 1 ? 1.0 : 0.0));
    }
  }
  CHECK(moments_from_state(single, 2, identity).max_abs() == 0.0);

  const std::array<int, 2> both{0, 1};
  const auto pair = fock::pure_density(fock::fock_state(2, both));
  const auto m2 = moments_from_state(pair, 2, Eigen::MatrixXcd::Identity(2, 2));
  const std::array<int, 2> swapped{1, 0};
  CHECK(m2.at(both, both) == std::complex<double>(1.0));
  CHECK(m2.at(swapped, both) == -m2.at(both, both));
  CHECK(m2.at(both, swapped) == -m2.at(both, both));
}

TEST_CASE("symbolic FFPE: H = 0 and one-mode oscillator") {
  ModeHamiltonian zero(2, 1.0);
  const auto c0 = symbolic_ffpe(zero);
  CHECK(c0.drift.cwiseAbs().maxCoeff() <= 1e-14);

  const double omega = 1.7, hbar = 0.6;
  ModeHamiltonian h(1, hbar);
  h.one_body(0, 0) = hbar * omega;
  const auto c = symbolic_ffpe(h);
  const Eigen::MatrixXcd L = c.ito_drift();
  CHECK(std::abs(L(0, 0) - std::complex<double>(0.0, -omega)) <= 1e-12);
  CHECK(std::abs(L(1, 1) - std::complex<double>(0.0, omega)) <= 1e-12);
  CHECK(std::abs(L(0, 1)) <= 1e-12);
  CHECK(std::abs(L(1, 0)) <= 1e-12);
  for (const auto& d : c.diffusion_data) CHECK(std::abs(d) <= 1e-12);
}

TEST_CASE("FFPE operator reproduces the Liouvillian and ED dynamics") {
  std::mt19937_64 rng(41);
  for (int n = 2; n <= 3; ++n) {
    const auto h = random_hamiltonian(n, rng);
    const auto c = symbolic_ffpe(h);
    const auto L = liouvillian(h).matrix();
    CHECK((ffpe_operator(c).matrix() - L).cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, L.cwiseAbs().maxCoeff()));

    const auto rho0 = random_density(n, rng);
    const Eigen::VectorXcd b0 = distribution_from_state(rho0).to_vector();
    const double t = 0.4;
    const Eigen::MatrixXcd propagator = (L * t).exp();
    const auto bt = GrassmannElement::from_vector(GeneratorSet(n), propagator * b0);
    const auto rho_t = fock::evolve_exact(h, rho0, t);
    for (int p = 1; p <= n; ++p) {
      CHECK(tensor_diff(distribution_moments(bt, p), fock::exact_moment_tensor(rho_t, p)) <= 1e-10);
    }
  }
}

TEST_CASE("one-body terms give drift only, two-body terms diffusion only") {
  std::mt19937_64 rng(43);
  auto h = random_hamiltonian(3, rng);
  auto one = h;
  one.two_body.clear();
  const auto c1 = symbolic_ffpe(one);
  for (const auto& d : c1.diffusion_data) CHECK(std::abs(d) <= 1e-12);

  auto two = h;
  two.one_body.setZero();
  const auto c2 = symbolic_ffpe(two);
  CHECK(c2.drift.cwiseAbs().maxCoeff() <= 1e-12);
  double dmax = 0.0;
  for (const auto& d : c2.diffusion_data) dmax = std::max(dmax, std::abs(d));
  CHECK(dmax > 0.1);
}

TEST_CASE("drift does not mix the psi and psi-plus sectors") {
  std::mt19937_64 rng(47);
  const auto c = symbolic_ffpe(random_hamiltonian(3, rng));
  const Eigen::MatrixXcd L = c.ito_drift();
  for (int p = 0; p < 6; ++p)
    for (int r = 0; r < 6; ++r)
      if ((p & 1) != (r & 1)) CHECK(std::abs(L(p, r)) <= 1e-12);
}
