#pragma once

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "fermiphase/grassmann.hpp"

namespace testsupport {

using fermiphase::grassmann::GeneratorSet;
using fermiphase::grassmann::GrassmannElement;
using fermiphase::grassmann::Monomial;

inline std::complex<double> random_complex(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

// parity: 0 even, 1 odd, -1 mixed.  Roughly `density` of the admissible monomials populated.
inline GrassmannElement random_element(GeneratorSet set, std::mt19937_64& rng, int parity = -1,
                                       double density = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrassmannElement e(set);
  for (Monomial m = 0; m < set.basis_size(); ++m) {
    if (parity >= 0 && (std::popcount(m) & 1) != parity) continue;
    if (u(rng) < density) e.add_term(m, random_complex(rng));
  }
  return e;
}

inline double diff(const GrassmannElement& a, const GrassmannElement& b) { return (a - b).max_abs(); }

inline Eigen::MatrixXcd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = random_complex(rng);
  return m;
}

}  // namespace testsupport
