#include "fermiphase/bloch.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fermiphase/error.hpp"

namespace fermiphase {

BlochBands bloch_bands(double depth, double kl, int bands, int cutoff, const std::vector<double>& quasimomenta,
                       double hbar, double mass, double edge_tolerance) {
  if (!(kl > 0.0)) throw ValidationError("lattice wavevector must be positive");
  if (bands < 1) throw ValidationError("need at least one band");
  if (cutoff < bands) throw ValidationError("plane-wave cutoff must be at least the band count");
  if (!(hbar > 0.0) || !(mass > 0.0)) throw ValidationError("hbar and mass must be positive");
  const int n = 2 * cutoff + 1;
  BlochBands out;
  out.quasimomenta = quasimomenta;
  out.energies.resize(static_cast<Eigen::Index>(quasimomenta.size()), bands);
  for (std::size_t iq = 0; iq < quasimomenta.size(); ++iq) {
    const double q = quasimomenta[iq];
    // sin²(k_L x) = ½ − ¼(e^{2ik_L x} + e^{−2ik_L x})
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      const double k = q + 2.0 * kl * (j - cutoff);
      h(j, j) = hbar * hbar * k * k / (2.0 * mass) + 0.5 * depth;
      if (j + 1 < n) h(j, j + 1) = h(j + 1, j) = -0.25 * depth;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    out.energies.row(static_cast<Eigen::Index>(iq)) = eig.eigenvalues().head(bands).transpose();
    const Eigen::MatrixXd v = eig.eigenvectors().leftCols(bands);
    out.vectors.push_back(v.cast<std::complex<double>>());
    for (int b = 0; b < bands; ++b) {
      out.edge_weight = std::max({out.edge_weight, v(0, b) * v(0, b), v(n - 1, b) * v(n - 1, b)});
    }
  }
  if (out.edge_weight > edge_tolerance) {
    std::ostringstream msg;
    msg << "plane-wave cutoff " << cutoff << " may be unconverged: edge weight " << out.edge_weight;
    out.warning = msg.str();
  }
  return out;
}

std::vector<double> brillouin_zone(double kl, int n) {
  std::vector<double> q;
  for (int i = 1; i <= n; ++i) q.push_back(-kl + 2.0 * kl * i / n);
  return q;
}

}  // namespace fermiphase
