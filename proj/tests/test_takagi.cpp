#include <complex>
#include <random>

#include "doctest.h"
#include "fermiphase/error.hpp"
#include "fermiphase/takagi.hpp"
#include "support.hpp"

using namespace fermiphase;
using cd = std::complex<double>;

namespace {

Eigen::MatrixXcd random_symmetric(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXcd a = testsupport::random_matrix(d, d, rng);
  return a + a.transpose();
}

double reconstruction(const TakagiFactor& f, const Eigen::MatrixXcd& q) {
  return (f.K * f.K.transpose() - q).norm() / q.norm();
}

}  // namespace

TEST_CASE("identity") {
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(2, 2);
  const auto f = takagi_factor(I);
  CHECK(f.K.cols() == 2);
  CHECK(reconstruction(f, I) <= 1e-14);
}

TEST_CASE("swap matrix") {
  Eigen::MatrixXcd q(2, 2);
  q << 0, 1, 1, 0;
  Eigen::MatrixXcd k(2, 2);
  k << 1, cd(0, 1), 1, cd(0, -1);
  k /= std::sqrt(2.0);
  CHECK((k * k.transpose() - q).norm() <= 1e-15);
  const auto f = takagi_factor(q);
  CHECK(reconstruction(f, q) <= 1e-14);
  CHECK(std::abs(f.singular_values[0] - 1.0) <= 1e-14);
  CHECK(std::abs(f.singular_values[1] - 1.0) <= 1e-14);
}

TEST_CASE("random symmetric matrices up to d = 64") {
  std::mt19937_64 rng(53);
  for (int d : {1, 2, 5, 17, 64}) {
    const auto q = random_symmetric(d, rng);
    const auto f = takagi_factor(q);
    CHECK(reconstruction(f, q) <= 1e-10);
    for (Eigen::Index i = 1; i < f.singular_values.size(); ++i) {
      CHECK(f.singular_values[i] <= f.singular_values[i - 1]);
    }
    // singular values agree with the SVD
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(q).singularValues();
    CHECK((sv.head(f.singular_values.size()) - f.singular_values).norm() <= 1e-10 * sv[0]);
  }
}

TEST_CASE("rank deficiency drops directions") {
  std::mt19937_64 rng(59);
  const Eigen::MatrixXcd k0 = testsupport::random_matrix(8, 3, rng);
  const Eigen::MatrixXcd q = k0 * k0.transpose();
  const auto f = takagi_factor(q);
  CHECK(f.K.cols() == 3);
  CHECK(reconstruction(f, q) <= 1e-10);
}

TEST_CASE("degenerate singular values") {
  std::mt19937_64 rng(61);
  // Q = O diag(2,2,2,1) Oᵀ with complex orthogonal-free unitary U: Q = U Σ Uᵀ
  const Eigen::MatrixXcd u = Eigen::HouseholderQR<Eigen::MatrixXcd>(testsupport::random_matrix(4, 4, rng)).householderQ();
  Eigen::VectorXcd s(4);
  s << 2, 2, 2, 1;
  const Eigen::MatrixXcd q = u * s.asDiagonal() * u.transpose();
  const auto f = takagi_factor(q);
  CHECK(reconstruction(f, q) <= 1e-12);
}

TEST_CASE("scale equivariance and the i K relation") {
  std::mt19937_64 rng(67);
  const auto q = random_symmetric(6, rng);
  const auto f = takagi_factor(q);
  const cd c(0.3, -1.1);
  const auto g = takagi_factor(c * c * q);
  CHECK(reconstruction(g, c * c * q) <= 1e-10);
  const Eigen::MatrixXcd kp = cd(0, 1) * f.K;
  CHECK((kp * kp.transpose() + q).norm() <= 1e-10 * q.norm());
}

TEST_CASE("asymmetric input is rejected") {
  Eigen::MatrixXcd q(2, 2);
  q << 1, 2, 0, 1;
  CHECK_THROWS_AS(takagi_factor(q), ValidationError);
  CHECK(takagi_factor(Eigen::MatrixXcd::Zero(3, 3)).K.cols() == 0);
}
