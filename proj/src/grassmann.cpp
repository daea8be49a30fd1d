#include "fermiphase/grassmann.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "fermiphase/error.hpp"

namespace fermiphase::grassmann {

namespace {

Monomial bits_below(int index) { return (Monomial{1} << index) - 1; }
Monomial bits_above(int index) { return ~((Monomial{1} << (index + 1)) - 1); }

int sign_of(int transpositions) { return (transpositions & 1) ? -1 : 1; }

void require_same_set(const GrassmannElement& a, const GrassmannElement& b) {
  if (!(a.generators() == b.generators())) {
    throw ConfigurationError("Grassmann elements over different generator sets");
  }
}

}  // namespace

GeneratorSet::GeneratorSet(int n_modes) : n_modes_(n_modes) {
  if (n_modes < 0 || 2 * n_modes > kMaxGenerators) {
    throw ConfigurationError("generator set needs 0 <= 2n <= " + std::to_string(kMaxGenerators) +
                             ", got n = " + std::to_string(n_modes));
  }
}

void GeneratorSet::check_index(int generator) const {
  if (generator < 0 || generator >= size()) {
    throw ConfigurationError("generator index " + std::to_string(generator) + " out of range [0, " +
                             std::to_string(size()) + ")");
  }
}

GrassmannElement GrassmannElement::scalar(GeneratorSet set, Complex value) {
  GrassmannElement e(set);
  e.add_term(0, value);
  return e;
}

GrassmannElement GrassmannElement::generator(GeneratorSet set, int index) {
  set.check_index(index);
  GrassmannElement e(set);
  e.add_term(Monomial{1} << index, 1.0);
  return e;
}

GrassmannElement GrassmannElement::ordered_product(GeneratorSet set, std::span<const int> generators,
                                                   Complex coefficient) {
  Monomial mask = 0;
  int sign = 1;
  for (int g : generators) {
    set.check_index(g);
    const Monomial bit = Monomial{1} << g;
    if (mask & bit) return GrassmannElement(set);
    // Moving g left past the already placed generators that sit after it in canonical order.
    sign *= sign_of(std::popcount(mask & bits_above(g)));
    mask |= bit;
  }
  GrassmannElement e(set);
  e.add_term(mask, coefficient * static_cast<double>(sign));
  return e;
}

GrassmannElement GrassmannElement::basis(GeneratorSet set, Monomial monomial) {
  GrassmannElement e(set);
  e.add_term(monomial, 1.0);
  return e;
}

Complex GrassmannElement::coefficient(Monomial monomial) const {
  auto it = terms_.find(monomial);
  return it == terms_.end() ? Complex{} : it->second;
}

void GrassmannElement::add_term(Monomial monomial, Complex value) {
  if (monomial >> set_.size()) {
    throw ConfigurationError("monomial uses generators outside the generator set");
  }
  if (value == Complex{}) return;
  auto [it, inserted] = terms_.try_emplace(monomial, value);
  if (!inserted) {
    it->second += value;
    if (it->second == Complex{}) terms_.erase(it);
  }
}

std::optional<int> GrassmannElement::parity() const {
  std::optional<int> result;
  for (const auto& [m, c] : terms_) {
    const int p = std::popcount(m) & 1;
    if (result && *result != p) return std::nullopt;
    result = p;
  }
  return result.value_or(0);
}

GrassmannElement& GrassmannElement::operator+=(const GrassmannElement& other) {
  require_same_set(*this, other);
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

GrassmannElement& GrassmannElement::operator-=(const GrassmannElement& other) {
  require_same_set(*this, other);
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

GrassmannElement& GrassmannElement::operator*=(Complex factor) {
  if (factor == Complex{}) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= factor;
    if (it->second == Complex{}) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

double GrassmannElement::max_abs() const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

Eigen::VectorXcd GrassmannElement::to_vector() const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(set_.basis_size()));
  for (const auto& [m, c] : terms_) v[m] = c;
  return v;
}

GrassmannElement GrassmannElement::from_vector(GeneratorSet set, const Eigen::VectorXcd& coefficients) {
  if (static_cast<std::size_t>(coefficients.size()) != set.basis_size()) {
    throw ConfigurationError("coefficient vector does not match generator set");
  }
  GrassmannElement e(set);
  for (Eigen::Index m = 0; m < coefficients.size(); ++m) {
    e.add_term(static_cast<Monomial>(m), coefficients[m]);
  }
  return e;
}

int product_sign(Monomial a, Monomial b) {
  if (a & b) return 0;
  int transpositions = 0;
  // Each generator of b passes over the generators of a that come after it.
  for (Monomial rest = b; rest; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    transpositions += std::popcount(a & bits_above(j));
  }
  return sign_of(transpositions);
}

GrassmannElement product(const GrassmannElement& a, const GrassmannElement& b) {
  require_same_set(a, b);
  GrassmannElement out(a.generators());
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) {
      const int s = product_sign(ma, mb);
      if (s != 0) out.add_term(ma | mb, static_cast<double>(s) * ca * cb);
    }
  }
  return out;
}

GrassmannElement berezin_derivative(const GrassmannElement& a, int generator, Side side) {
  a.generators().check_index(generator);
  const Monomial bit = Monomial{1} << generator;
  GrassmannElement out(a.generators());
  for (const auto& [m, c] : a.terms()) {
    if (!(m & bit)) continue;
    const Monomial passed = side == Side::left ? (m & bits_below(generator)) : (m & bits_above(generator));
    out.add_term(m & ~bit, static_cast<double>(sign_of(std::popcount(passed))) * c);
  }
  return out;
}

GrassmannElement berezin_integrate(const GrassmannElement& a, std::span<const int> generators) {
  Monomial seen = 0;
  for (int g : generators) {
    a.generators().check_index(g);
    const Monomial bit = Monomial{1} << g;
    if (seen & bit) {
      throw ConfigurationError("generator " + std::to_string(g) + " repeated in Berezin integration");
    }
    seen |= bit;
  }
  GrassmannElement result = a;
  for (int g : generators) result = berezin_derivative(result, g, Side::left);
  return result;
}

std::vector<int> phase_space_measure(const GeneratorSet& set) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(set.size()));
  for (int i = 0; i < set.n_modes(); ++i) order.push_back(GeneratorSet::psi(i));
  for (int i = 0; i < set.n_modes(); ++i) order.push_back(GeneratorSet::psi_plus(i));
  return order;
}

Complex phase_space_integral(const GrassmannElement& a) {
  const auto& set = a.generators();
  const Monomial top = static_cast<Monomial>(set.basis_size() - 1);
  const Complex c = a.coefficient(top);
  if (c == Complex{}) return {};
  // Only the top monomial survives; its sign under the measure is fixed by the order.
  const auto order = phase_space_measure(set);
  Monomial m = top;
  int transpositions = 0;
  for (int g : order) {
    transpositions += std::popcount(m & bits_below(g));
    m &= ~(Monomial{1} << g);
  }
  return c * static_cast<double>(sign_of(transpositions));
}

LinearSuperOperator::LinearSuperOperator(GeneratorSet set)
    : set_(set),
      matrix_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(set.basis_size()),
                                     static_cast<Eigen::Index>(set.basis_size()))) {}

LinearSuperOperator::LinearSuperOperator(GeneratorSet set, Eigen::MatrixXcd matrix)
    : set_(set), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(set.basis_size());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw ConfigurationError("superoperator matrix does not match generator set");
  }
}

GrassmannElement LinearSuperOperator::apply(const GrassmannElement& a) const {
  if (!(a.generators() == set_)) throw ConfigurationError("superoperator applied across generator sets");
  return GrassmannElement::from_vector(set_, matrix_ * a.to_vector());
}

LinearSuperOperator LinearSuperOperator::compose(const LinearSuperOperator& inner) const {
  if (!(inner.set_ == set_)) throw ConfigurationError("composing superoperators across generator sets");
  return LinearSuperOperator(set_, matrix_ * inner.matrix_);
}

}  // namespace fermiphase::grassmann
