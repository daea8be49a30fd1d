#pragma once

// Exact finite Grassmann algebra over paired generators g_i, g_i^+ with
// Berezin calculus.  Generators are totally ordered g_0 < g_0^+ < g_1 < g_1^+ < ...
// and every sign in this module is derived from that single order.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fermiphase::grassmann {

using Complex = std::complex<double>;
using Monomial = std::uint32_t;  // bitmask over generator indices

class GeneratorSet {
 public:
  static constexpr int kMaxGenerators = 16;

  explicit GeneratorSet(int n_modes);

  int n_modes() const { return n_modes_; }
  int size() const { return 2 * n_modes_; }
  std::size_t basis_size() const { return std::size_t{1} << size(); }

  /// Index of g_mode.
  static int psi(int mode) { return 2 * mode; }
  /// Index of g_mode^+.
  static int psi_plus(int mode) { return 2 * mode + 1; }

  void check_index(int generator) const;

  friend bool operator==(const GeneratorSet&, const GeneratorSet&) = default;

 private:
  int n_modes_;
};

enum class Side { left, right };

class GrassmannElement {
 public:
  explicit GrassmannElement(GeneratorSet set) : set_(set) {}

  static GrassmannElement scalar(GeneratorSet set, Complex value);
  static GrassmannElement generator(GeneratorSet set, int index);
  /// Product of the listed generators taken in the given order (not necessarily canonical).
  static GrassmannElement ordered_product(GeneratorSet set, std::span<const int> generators,
                                          Complex coefficient = 1.0);
  static GrassmannElement basis(GeneratorSet set, Monomial monomial);

  const GeneratorSet& generators() const { return set_; }
  const std::map<Monomial, Complex>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Complex coefficient(Monomial monomial) const;
  Complex scalar_part() const { return coefficient(0); }

  /// Adds to the coefficient of a canonical monomial; exact zeros are pruned.
  void add_term(Monomial monomial, Complex value);

  /// 0 = even, 1 = odd, nullopt = mixed parity.  The zero element is even.
  std::optional<int> parity() const;

  GrassmannElement& operator+=(const GrassmannElement& other);
  GrassmannElement& operator-=(const GrassmannElement& other);
  GrassmannElement& operator*=(Complex factor);

  friend GrassmannElement operator+(GrassmannElement a, const GrassmannElement& b) { return a += b; }
  friend GrassmannElement operator-(GrassmannElement a, const GrassmannElement& b) { return a -= b; }
  friend GrassmannElement operator*(GrassmannElement a, Complex f) { return a *= f; }
  friend GrassmannElement operator*(Complex f, GrassmannElement a) { return a *= f; }
  friend bool operator==(const GrassmannElement& a, const GrassmannElement& b) {
    return a.set_ == b.set_ && a.terms_ == b.terms_;
  }

  /// Largest coefficient magnitude; used for approximate comparisons.
  double max_abs() const;

  /// Dense coefficient vector indexed by monomial mask.
  Eigen::VectorXcd to_vector() const;
  static GrassmannElement from_vector(GeneratorSet set, const Eigen::VectorXcd& coefficients);

 private:
  GeneratorSet set_;
  std::map<Monomial, Complex> terms_;
};

/// Sign (+1/-1) of reordering the concatenation a·b of two canonical monomials into canonical
/// order, or 0 when they share a generator.
int product_sign(Monomial a, Monomial b);

GrassmannElement product(const GrassmannElement& a, const GrassmannElement& b);
inline GrassmannElement operator*(const GrassmannElement& a, const GrassmannElement& b) {
  return product(a, b);
}

GrassmannElement berezin_derivative(const GrassmannElement& a, int generator, Side side);

/// Iterated Berezin integral; `generators` lists the integrations in the order they are applied
/// (innermost first), so that ∫dg₁⁺dg₁ in the usual notation is {g₁, g₁⁺}.
GrassmannElement berezin_integrate(const GrassmannElement& a, std::span<const int> generators);

/// Full phase-space integral ∫ dg_n^+ ... dg_1^+ dg_n ... dg_1 f.
Complex phase_space_integral(const GrassmannElement& a);

/// Integration order used by phase_space_integral.
std::vector<int> phase_space_measure(const GeneratorSet& set);

/// Dense linear map on Grassmann coefficient vectors (dimension 4^n).
class LinearSuperOperator {
 public:
  explicit LinearSuperOperator(GeneratorSet set);
  LinearSuperOperator(GeneratorSet set, Eigen::MatrixXcd matrix);

  template <class Map>
  static LinearSuperOperator from_map(GeneratorSet set, Map&& map) {
    LinearSuperOperator op(set);
    for (Monomial m = 0; m < set.basis_size(); ++m) {
      op.matrix_.col(m) = map(GrassmannElement::basis(set, m)).to_vector();
    }
    return op;
  }

  const GeneratorSet& generators() const { return set_; }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }

  GrassmannElement apply(const GrassmannElement& a) const;
  LinearSuperOperator compose(const LinearSuperOperator& inner) const;  // this ∘ inner

 private:
  GeneratorSet set_;
  Eigen::MatrixXcd matrix_;
};

}  // namespace fermiphase::grassmann
