#include "fermiphase/takagi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fermiphase/error.hpp"

namespace fermiphase {

// With Q = A + iB, the real symmetric matrix [[A, B], [B, −A]] has eigenvalues ±σ_k.  An
// eigenvector [x; y] for +σ gives u = x + iy with Q ū = σ u, which is the Takagi relation.
// Eigenvectors of distinct eigenvalues are orthogonal, and the (+σ, −σ) pairs map to (u, iū),
// so the u's from the positive half are orthonormal even inside degenerate clusters.
TakagiFactor takagi_factor(const Eigen::MatrixXcd& Q, double tol) {
  if (Q.rows() != Q.cols()) throw ValidationError("Takagi factorization needs a square matrix");
  const Eigen::Index d = Q.rows();
  const double qnorm = Q.norm();
  TakagiFactor out;
  if (d == 0 || qnorm == 0.0) {
    out.K = Eigen::MatrixXcd::Zero(d, 0);
    out.singular_values.resize(0);
    return out;
  }
  const double asym = (Q - Q.transpose()).norm();
  if (asym > tol * qnorm) {
    throw ValidationError("matrix is not symmetric: ‖Q − Qᵀ‖_F / ‖Q‖_F = " + std::to_string(asym / qnorm));
  }
  const Eigen::MatrixXcd S = 0.5 * (Q + Q.transpose());
  const Eigen::MatrixXd A = S.real(), B = S.imag();
  Eigen::MatrixXd H(2 * d, 2 * d);
  H << A, B, B, -A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double smax = lambda[2 * d - 1];
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 2 * d - 1; k >= 0 && lambda[k] > tol * smax; --k) keep.push_back(k);

  out.K.resize(d, static_cast<Eigen::Index>(keep.size()));
  out.singular_values.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto k = keep[c];
    const Eigen::VectorXd v = eig.eigenvectors().col(k);
    Eigen::VectorXcd u(d);
    for (Eigen::Index i = 0; i < d; ++i) u[i] = {v[i], v[d + i]};
    u.normalize();
    const auto col = static_cast<Eigen::Index>(c);
    out.singular_values[col] = lambda[k];
    out.K.col(col) = u * std::sqrt(lambda[k]);
  }
  out.residual = (out.K * out.K.transpose() - Q).norm() / qnorm;
  if (out.residual > tol) {
    throw FactorizationError("Takagi reconstruction residual " + std::to_string(out.residual) +
                             " exceeds tolerance");
  }
  return out;
}

}  // namespace fermiphase
