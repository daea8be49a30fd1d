#include "fermiphase/selftest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "fermiphase/grassmann.hpp"
#include "fermiphase/wiener.hpp"

namespace fermiphase {

namespace {

using grassmann::GeneratorSet;
using grassmann::GrassmannElement;
using grassmann::Monomial;
using grassmann::Side;

GrassmannElement random_homogeneous(GeneratorSet set, std::mt19937_64& rng, int parity) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(0.4);
  GrassmannElement e(set);
  for (Monomial m = 0; m < set.basis_size(); ++m) {
    if ((std::popcount(m) & 1) == parity && keep(rng)) e.add_term(m, {normal(rng), normal(rng)});
  }
  return e;
}

SelfTestCheck summarize(const std::string& name, double worst, double tol) {
  std::ostringstream os;
  os << "max deviation " << worst << " (tol " << tol << ")";
  return {name, worst <= tol, os.str()};
}

}  // namespace

std::vector<SelfTestCheck> algebra_selftest(int cases, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> modes(1, 4), bit(0, 1);
  double anti = 0.0, assoc = 0.0, rule = 0.0, parts = 0.0;
  bool nilpotent = true;
  for (int c = 0; c < cases; ++c) {
    const GeneratorSet set(modes(rng));
    std::uniform_int_distribution<int> gen(0, set.size() - 1);
    const int i = gen(rng), j = gen(rng);
    const auto gi = GrassmannElement::generator(set, i), gj = GrassmannElement::generator(set, j);
    anti = std::max(anti, (gi * gj + gj * gi).max_abs());
    nilpotent = nilpotent && (gi * gi).is_zero();

    const int pa = bit(rng), pb = bit(rng);
    const auto a = random_homogeneous(set, rng, pa);
    const auto b = random_homogeneous(set, rng, pb);
    const auto d = random_homogeneous(set, rng, bit(rng));
    assoc = std::max(assoc, ((a * b) * d - a * (b * d)).max_abs());

    const double sign = pa ? -1.0 : 1.0;
    const auto lhs = grassmann::berezin_derivative(a * b, i, Side::left);
    const auto rhs = grassmann::berezin_derivative(a, i, Side::left) * b +
                     sign * (a * grassmann::berezin_derivative(b, i, Side::left));
    rule = std::max(rule, (lhs - rhs).max_abs());

    // ∫ a ∂b = −σ(a) ∫ (∂a) b over the full phase space.
    const auto x = grassmann::phase_space_integral(a * grassmann::berezin_derivative(b, i, Side::left));
    const auto y = grassmann::phase_space_integral(grassmann::berezin_derivative(a, i, Side::left) * b);
    parts = std::max(parts, std::abs(x + sign * y));
  }
  const double tol = 1e-12;
  return {summarize("algebra: anticommutation", anti, 0.0),
          {"algebra: nilpotency", nilpotent, nilpotent ? "g·g = 0 for every sampled generator" : "g·g != 0"},
          summarize("algebra: associativity", assoc, tol),
          summarize("algebra: graded product rule", rule, tol),
          summarize("algebra: integration by parts", parts, tol)};
}

std::vector<SelfTestCheck> noise_selftest(const DriftNoiseCoefficients& coeffs, int samples, double dt,
                                          std::uint64_t seed, double z) {
  struct Entry {
    Sector sector;
    int row, col;
  };
  const int dim = coeffs.dimension();
  const int channels = coeffs.channel_count();
  if (channels == 0) return {{"noise: covariance", true, "no noise channels"}};

  std::vector<Entry> entries;
  std::vector<Eigen::MatrixXcd> K;  // global channel order
  for (Sector s : {Sector::psi, Sector::psi_plus}) {
    Eigen::MatrixXcd used = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t a = 0; a < coeffs.noise(s).size(); ++a) {
      Eigen::MatrixXcd k = coeffs.noise_matrix(s, static_cast<int>(a));
      used += k.cwiseAbs().cast<Complex>();
    }
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        if (used(r, c) != Complex{}) entries.push_back({s, r, c});
  }
  for (Sector s : {Sector::psi, Sector::psi_plus})
    for (std::size_t a = 0; a < coeffs.noise(s).size(); ++a) K.push_back(coeffs.noise_matrix(s, static_cast<int>(a)));
  auto channel_value = [&](int a, const Entry& e) -> Complex {
    const bool in_psi = a < static_cast<int>(coeffs.psi_noise.size());
    if (in_psi != (e.sector == Sector::psi)) return {};
    return K[static_cast<std::size_t>(a)](e.row, e.col);
  };

  const std::size_t n = entries.size();
  std::vector<Complex> sum(n * n), value(n);
  std::vector<double> sq_re(n * n), sq_im(n * n);
  std::vector<double> w(static_cast<std::size_t>(channels));
  for (int t = 0; t < samples; ++t) {
    fill_wiener(seed, static_cast<std::uint64_t>(t), 0, dt, w);
    for (std::size_t e = 0; e < n; ++e) {
      Complex v{};
      for (int a = 0; a < channels; ++a) v += channel_value(a, entries[e]) * w[static_cast<std::size_t>(a)];
      value[e] = v;
    }
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        const Complex x = value[p] * value[q];
        sum[p * n + q] += x;
        sq_re[p * n + q] += x.real() * x.real();
        sq_im[p * n + q] += x.imag() * x.imag();
      }
  }
  double worst_same = 0.0, worst_cross = 0.0;
  const double N = samples;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      Complex expected{};
      for (int a = 0; a < channels; ++a) expected += channel_value(a, entries[p]) * channel_value(a, entries[q]);
      expected *= dt;
      const Complex mean = sum[p * n + q] / N;
      const double se_re = std::sqrt(std::max(0.0, sq_re[p * n + q] / N - mean.real() * mean.real()) / (N - 1));
      const double se_im = std::sqrt(std::max(0.0, sq_im[p * n + q] / N - mean.imag() * mean.imag()) / (N - 1));
      auto score = [](double d, double se) { return se > 0.0 ? std::abs(d) / se : (std::abs(d) < 1e-14 ? 0.0 : 1e300); };
      const double zz = std::max(score(mean.real() - expected.real(), se_re), score(mean.imag() - expected.imag(), se_im));
      double& worst = entries[p].sector == entries[q].sector ? worst_same : worst_cross;
      worst = std::max(worst, zz);
    }
  std::ostringstream a, b;
  a << n << " noisy entries, " << samples << " samples, max z " << worst_same << " (limit " << z << ")";
  b << "max z " << worst_cross << " (limit " << z << ")";
  return {{"noise: same-sector covariance", worst_same <= z, a.str()},
          {"noise: cross-sector covariance", worst_cross <= z, b.str()}};
}

}  // namespace fermiphase
