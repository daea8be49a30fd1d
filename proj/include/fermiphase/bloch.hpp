#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fermiphase {

/// Bands of −ħ²/2m ∂²_x + V0 sin²(k_L x) in the plane-wave basis q + 2 k_L j, |j| ≤ cutoff.
struct BlochBands {
  std::vector<double> quasimomenta;
  Eigen::MatrixXd energies;                 // quasimomenta × bands, ascending per row
  std::vector<Eigen::MatrixXcd> vectors;    // per quasimomentum: (2·cutoff+1) × bands, orthonormal columns
  double edge_weight = 0.0;                 // largest weight of a kept band on the outermost plane waves
  std::string warning;                      // set when edge_weight suggests an unconverged cutoff
};

BlochBands bloch_bands(double depth, double lattice_wavevector, int bands, int cutoff,
                       const std::vector<double>& quasimomenta, double hbar = 1.0, double mass = 1.0,
                       double edge_tolerance = 1e-10);

/// n uniformly spaced quasimomenta in (−k_L, k_L].
std::vector<double> brillouin_zone(double lattice_wavevector, int n);

}  // namespace fermiphase
