#pragma once

#include <Eigen/Dense>

namespace fermiphase {

struct TakagiFactor {
  Eigen::MatrixXcd K;               // d × r, Q ≈ K Kᵀ
  Eigen::VectorXd singular_values;  // descending, length r
  double residual = 0.0;            // ‖K Kᵀ − Q‖_F / ‖Q‖_F (0 for Q = 0)
};

/// Takagi factorization of a complex symmetric matrix.  Directions with singular value below
/// tol · σ_max are dropped.  Throws ValidationError when Q is not symmetric within tol and
/// FactorizationError when the reconstruction misses tol.
TakagiFactor takagi_factor(const Eigen::MatrixXcd& Q, double tol = 1e-10);

}  // namespace fermiphase
