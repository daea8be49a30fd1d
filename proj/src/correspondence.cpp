#include "fermiphase/correspondence.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/Sparse>

#include "fermiphase/error.hpp"

namespace fermiphase::grassmann {

namespace {

int mode_count_of(const fock::DensityMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 2 || !std::has_single_bit(static_cast<unsigned>(rho.rows()))) {
    throw ConfigurationError("density matrix must be square with a power-of-two dimension");
  }
  return std::countr_zero(static_cast<unsigned>(rho.rows()));
}

std::vector<int> occupied_modes(unsigned occupation) {
  std::vector<int> modes;
  for (unsigned rest = occupation; rest; rest &= rest - 1) modes.push_back(std::countr_zero(rest));
  return modes;
}

void check_mode(const GrassmannElement& f, int mode) {
  if (mode < 0 || mode >= f.generators().n_modes()) {
    throw ConfigurationError("mode " + std::to_string(mode) + " outside generator set");
  }
}

}  // namespace

GrassmannElement left_annihilation(const GrassmannElement& f, int mode) {
  check_mode(f, mode);
  return product(GrassmannElement::generator(f.generators(), GeneratorSet::psi(mode)), f);
}

GrassmannElement left_creation(const GrassmannElement& f, int mode) {
  check_mode(f, mode);
  return berezin_derivative(f, GeneratorSet::psi(mode), Side::left);
}

GrassmannElement right_annihilation(const GrassmannElement& f, int mode) {
  check_mode(f, mode);
  return berezin_derivative(f, GeneratorSet::psi_plus(mode), Side::right);
}

GrassmannElement right_creation(const GrassmannElement& f, int mode) {
  check_mode(f, mode);
  return product(f, GrassmannElement::generator(f.generators(), GeneratorSet::psi_plus(mode)));
}

GrassmannElement vacuum_distribution(GeneratorSet set) {
  const Monomial top = static_cast<Monomial>(set.basis_size() - 1);
  GrassmannElement unit = GrassmannElement::basis(set, top);
  return unit * (1.0 / phase_space_integral(unit));
}

GrassmannElement distribution_from_state(const fock::DensityMatrix& rho) {
  const GeneratorSet set(mode_count_of(rho));
  const GrassmannElement vacuum = vacuum_distribution(set);
  GrassmannElement b(set);
  for (Eigen::Index ket = 0; ket < rho.rows(); ++ket) {
    for (Eigen::Index bra = 0; bra < rho.cols(); ++bra) {
      const Complex value = rho(ket, bra);
      if (value == Complex{}) continue;
      // |S⟩⟨T| = c†_{s1}…c†_{sk}|0⟩⟨0|c_{tj}…c_{t1}, ascending s and t.
      GrassmannElement term = vacuum;
      const auto s = occupied_modes(static_cast<unsigned>(ket));
      for (auto it = s.rbegin(); it != s.rend(); ++it) term = left_creation(term, *it);
      const auto t = occupied_modes(static_cast<unsigned>(bra));
      for (auto it = t.rbegin(); it != t.rend(); ++it) term = right_annihilation(term, *it);
      b += term * value;
    }
  }
  return b;
}

Complex phase_space_moment(const GrassmannElement& b, std::span<const int> psi_modes,
                           std::span<const int> psi_plus_modes) {
  const GeneratorSet& set = b.generators();
  std::vector<int> left;
  for (auto it = psi_modes.rbegin(); it != psi_modes.rend(); ++it) {
    if (*it < 0 || *it >= set.n_modes()) throw ConfigurationError("moment mode index out of range");
    left.push_back(GeneratorSet::psi(*it));
  }
  std::vector<int> right;
  for (int m : psi_plus_modes) {
    if (m < 0 || m >= set.n_modes()) throw ConfigurationError("moment mode index out of range");
    right.push_back(GeneratorSet::psi_plus(m));
  }
  const GrassmannElement l = GrassmannElement::ordered_product(set, left);
  const GrassmannElement r = GrassmannElement::ordered_product(set, right);
  if (l.is_zero() || r.is_zero()) return {};
  const auto [lm, lc] = *l.terms().begin();
  const auto [rm, rc] = *r.terms().begin();
  const Monomial top = static_cast<Monomial>(set.basis_size() - 1);
  if (lm & rm) return {};
  const Monomial needed = top & ~(lm | rm);
  const Complex bc = b.coefficient(needed);
  if (bc == Complex{}) return {};
  const int s1 = product_sign(lm, needed);
  const int s2 = product_sign(lm | needed, rm);
  GrassmannElement full = GrassmannElement::basis(set, top) * (static_cast<double>(s1 * s2) * lc * bc * rc);
  return phase_space_integral(full);
}

MomentTensor distribution_moments(const GrassmannElement& b, int order) {
  const int n = b.generators().n_modes();
  MomentTensor M(order, n);
  std::vector<int> idx(static_cast<std::size_t>(2 * order), 0);
  for (std::size_t flat = 0; flat < M.size(); ++flat) {
    std::size_t rest = flat;
    for (int k = 2 * order - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
    }
    const std::span<const int> all(idx);
    M[flat] = phase_space_moment(b, all.first(static_cast<std::size_t>(order)),
                                 all.subspan(static_cast<std::size_t>(order)));
  }
  return M;
}

MomentTensor moments_from_state(const fock::DensityMatrix& rho, int order,
                                const Eigen::MatrixXcd& mode_functions) {
  const int n = mode_count_of(rho);
  if (order < 1) throw ConfigurationError("moment order must be at least 1");
  if (mode_functions.cols() != n) {
    throw ConfigurationError("mode function matrix has " + std::to_string(mode_functions.cols()) +
                             " columns, expected " + std::to_string(n));
  }
  const int points = static_cast<int>(mode_functions.rows());
  if (order > n) return MomentTensor(order, points);

  const MomentTensor modes = distribution_moments(distribution_from_state(rho), order);
  std::vector<int> extents(static_cast<std::size_t>(2 * order), n);
  std::vector<Complex> data(modes.data().begin(), modes.data().end());
  const Eigen::MatrixXcd conj_functions = mode_functions.conjugate();
  for (int axis = 0; axis < 2 * order; ++axis) {
    data = apply_along_axis(data, extents, axis, axis < order ? mode_functions : conj_functions);
  }
  MomentTensor out(order, points);
  std::copy(data.begin(), data.end(), out.data().begin());
  return out;
}

LinearSuperOperator liouvillian(const ModeHamiltonian& h) {
  const GeneratorSet set(h.n_modes);
  const Complex prefactor(0.0, -1.0 / h.hbar);
  return LinearSuperOperator::from_map(set, [&](const GrassmannElement& f) {
    GrassmannElement h_rho(set);
    GrassmannElement rho_h(set);
    for (int a = 0; a < h.n_modes; ++a) {
      for (int b = 0; b < h.n_modes; ++b) {
        const Complex w = h.one_body(a, b);
        if (w == Complex{}) continue;
        h_rho += left_creation(left_annihilation(f, b), a) * w;
        rho_h += right_annihilation(right_creation(f, a), b) * w;
      }
    }
    for (const auto& t : h.two_body) {
      h_rho += left_creation(left_creation(left_annihilation(left_annihilation(f, t.d), t.c), t.b), t.a) *
               t.coefficient;
      rho_h += right_annihilation(right_annihilation(right_creation(right_creation(f, t.a), t.b), t.c), t.d) *
               t.coefficient;
    }
    return (h_rho - rho_h) * prefactor;
  });
}

FfpeCoefficients::FfpeCoefficients(GeneratorSet set)
    : generators(set),
      drift(Eigen::MatrixXcd::Zero(set.size(), set.size())),
      diffusion_data(static_cast<std::size_t>(set.size() * set.size() * set.size() * set.size())) {}

Complex FfpeCoefficients::diffusion(int p, int q, int r, int s) const {
  const std::size_t g = static_cast<std::size_t>(generators.size());
  return diffusion_data[((static_cast<std::size_t>(p) * g + q) * g + r) * g + s];
}

void FfpeCoefficients::set_diffusion(int p, int q, int r, int s, Complex value) {
  const std::size_t g = static_cast<std::size_t>(generators.size());
  auto at = [&](int a, int b, int c, int d) -> Complex& {
    return diffusion_data[((static_cast<std::size_t>(a) * g + b) * g + c) * g + d];
  };
  at(p, q, r, s) = value;
  at(q, p, r, s) = -value;
  at(p, q, s, r) = -value;
  at(q, p, s, r) = value;
}

namespace {

GrassmannElement drift_term(const GrassmannElement& f, int p, int r) {
  const GrassmannElement gr = GrassmannElement::generator(f.generators(), r);
  return berezin_derivative(product(gr, f), p, Side::left) * -1.0;
}

GrassmannElement diffusion_term(const GrassmannElement& f, int p, int q, int r, int s) {
  const std::array<int, 2> pair{r, s};
  const GrassmannElement grs = GrassmannElement::ordered_product(f.generators(), pair);
  return berezin_derivative(berezin_derivative(product(grs, f), q, Side::right), p, Side::right);
}

struct PairIndex {
  int first, second;
};

std::vector<PairIndex> ordered_pairs(int n) {
  std::vector<PairIndex> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) pairs.push_back({a, b});
  }
  return pairs;
}

}  // namespace

LinearSuperOperator ffpe_operator(const FfpeCoefficients& c) {
  const GeneratorSet set = c.generators;
  const int g = set.size();
  const auto pairs = ordered_pairs(g);
  return LinearSuperOperator::from_map(set, [&](const GrassmannElement& f) {
    GrassmannElement out(set);
    for (int p = 0; p < g; ++p) {
      for (int r = 0; r < g; ++r) {
        if (c.drift(p, r) != Complex{}) out += drift_term(f, p, r) * c.drift(p, r);
      }
    }
    for (const auto& pq : pairs) {
      for (const auto& rs : pairs) {
        const Complex d = c.diffusion(pq.first, pq.second, rs.first, rs.second);
        if (d != Complex{}) out += diffusion_term(f, pq.first, pq.second, rs.first, rs.second) * d;
      }
    }
    return out;
  });
}

FfpeCoefficients symbolic_ffpe(const ModeHamiltonian& h, double tolerance) {
  const GeneratorSet set(h.n_modes);
  const int g = set.size();
  const auto basis = static_cast<Eigen::Index>(set.basis_size());
  const auto pairs = ordered_pairs(g);
  const Eigen::Index n_drift = static_cast<Eigen::Index>(g) * g;
  const Eigen::Index n_unknowns = n_drift + static_cast<Eigen::Index>(pairs.size() * pairs.size());

  // Column u holds the image of every basis monomial under the u-th elementary FFPE term.
  std::vector<Eigen::Triplet<Complex>> triplets;
  auto add_image = [&](Eigen::Index column, Monomial input, const GrassmannElement& image) {
    for (const auto& [m, v] : image.terms()) {
      triplets.emplace_back(static_cast<Eigen::Index>(input) * basis + static_cast<Eigen::Index>(m), column, v);
    }
  };
  for (Monomial m = 0; m < set.basis_size(); ++m) {
    const GrassmannElement f = GrassmannElement::basis(set, m);
    for (int p = 0; p < g; ++p) {
      for (int r = 0; r < g; ++r) add_image(p * g + r, m, drift_term(f, p, r));
    }
    Eigen::Index column = n_drift;
    for (const auto& pq : pairs) {
      for (const auto& rs : pairs) {
        add_image(column++, m, diffusion_term(f, pq.first, pq.second, rs.first, rs.second));
      }
    }
  }
  Eigen::SparseMatrix<Complex> A(basis * basis, n_unknowns);
  A.setFromTriplets(triplets.begin(), triplets.end());

  const LinearSuperOperator target = liouvillian(h);
  Eigen::VectorXcd rhs(basis * basis);
  for (Eigen::Index col = 0; col < basis; ++col) rhs.segment(col * basis, basis) = target.matrix().col(col);

  const Eigen::MatrixXcd normal = Eigen::MatrixXcd(A.adjoint() * A);
  const Eigen::VectorXcd projected = A.adjoint() * rhs;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> solver(normal);
  solver.setThreshold(1e-10);
  const Eigen::VectorXcd x = solver.solve(projected);

  FfpeCoefficients out(set);
  out.rank_deficiency = static_cast<int>(n_unknowns - solver.rank());
  for (int p = 0; p < g; ++p) {
    for (int r = 0; r < g; ++r) out.drift(p, r) = x[p * g + r];
  }
  Eigen::Index column = n_drift;
  for (const auto& pq : pairs) {
    for (const auto& rs : pairs) out.set_diffusion(pq.first, pq.second, rs.first, rs.second, x[column++]);
  }
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  out.residual = (A * x - rhs).cwiseAbs().maxCoeff() / scale;
  if (out.residual > tolerance) {
    throw StructuralError("Liouvillian is not of drift/diffusion form: residual " + std::to_string(out.residual));
  }
  if (out.rank_deficiency != 0) {
    throw StructuralError("drift/diffusion coefficients are not unique (rank deficiency " +
                          std::to_string(out.rank_deficiency) + ")");
  }
  return out;
}

}  // namespace fermiphase::grassmann
