#include "fermiphase/models.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fermiphase/error.hpp"
#include "fermiphase/takagi.hpp"

namespace fermiphase {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

void check_units(double hbar, double mass) {
  require(hbar > 0.0 && std::isfinite(hbar), "hbar must be positive and finite");
  require(mass > 0.0 && std::isfinite(mass), "mass must be positive and finite");
}

}  // namespace

void GridSpec::validate() const {
  require(dimension >= 1 && dimension <= 3, "grid dimension must be 1, 2 or 3");
  require(points_per_axis >= 2, "grid needs at least 2 points per axis");
  require(spacing > 0.0 && std::isfinite(spacing), "grid spacing must be positive");
}

int GridSpec::point_count() const {
  int n = 1;
  for (int a = 0; a < dimension; ++a) n *= points_per_axis;
  return n;
}

double GridSpec::cell_volume() const { return std::pow(spacing, dimension); }

std::array<int, 3> GridSpec::coordinates(int point) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < dimension; ++a) {
    c[a] = point % points_per_axis;
    point /= points_per_axis;
  }
  return c;
}

int GridSpec::point_index(const std::array<int, 3>& coords) const {
  int index = 0;
  for (int a = dimension - 1; a >= 0; --a) {
    const int c = ((coords[a] % points_per_axis) + points_per_axis) % points_per_axis;
    index = index * points_per_axis + c;
  }
  return index;
}

std::array<double, 3> GridSpec::position(int point) const {
  const auto c = coordinates(point);
  return {c[0] * spacing, c[1] * spacing, c[2] * spacing};
}

std::array<double, 3> GridSpec::wavevector(int point) const {
  auto c = coordinates(point);
  std::array<double, 3> k{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension; ++a) {
    if (2 * c[a] > points_per_axis) c[a] -= points_per_axis;
    k[a] = 2.0 * std::numbers::pi * c[a] / length();
  }
  return k;
}

std::vector<double> PotentialSpec::sample(const GridSpec& grid, double mass) const {
  const int n = grid.point_count();
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  switch (kind) {
    case PotentialKind::none:
      break;
    case PotentialKind::harmonic:
      for (int r = 0; r < n; ++r) {
        const auto x = grid.position(r);
        double d2 = 0.0;
        for (int a = 0; a < grid.dimension; ++a) d2 += std::pow(x[a] - 0.5 * grid.length(), 2);
        v[r] = 0.5 * mass * omega * omega * d2;
      }
      break;
    case PotentialKind::sin2:
      for (int r = 0; r < n; ++r) {
        const auto x = grid.position(r);
        for (int a = 0; a < grid.dimension; ++a) v[r] += depth * std::pow(std::sin(lattice_wavevector * x[a]), 2);
      }
      break;
    case PotentialKind::tabulated:
      require(values.size() == v.size(), "tabulated potential has " + std::to_string(values.size()) +
                                             " values, grid has " + std::to_string(n) + " points");
      for (double x : values) require(std::isfinite(x), "tabulated potential must be finite");
      v = values;
      break;
  }
  return v;
}

std::size_t MultiComponentModel::two_body_index(int a, int b, int c, int d, int r, int s, int points) const {
  const auto C = static_cast<std::size_t>(components);
  const auto P = static_cast<std::size_t>(points);
  return ((((static_cast<std::size_t>(a) * C + b) * C + c) * C + d) * P + r) * P + s;
}

double MultiComponentModel::kernel(int a, int b, int c, int d, int r, int s, int points) const {
  if (two_body.empty()) return 0.0;
  return two_body[two_body_index(a, b, c, d, r, s, points)];
}

Eigen::SparseMatrix<double> kinetic_stencil(const GridSpec& grid, double hbar, double mass) {
  grid.validate();
  check_units(hbar, mass);
  const int n = grid.point_count();
  const double c = hbar * hbar / (2.0 * mass * grid.spacing * grid.spacing);
  std::vector<Eigen::Triplet<double>> t;
  for (int r = 0; r < n; ++r) {
    const auto x = grid.coordinates(r);
    for (int a = 0; a < grid.dimension; ++a) {
      t.emplace_back(r, r, 2.0 * c);
      for (int step : {-1, 1}) {
        auto y = x;
        y[a] += step;
        t.emplace_back(r, grid.point_index(y), -c);  // duplicates sum when M = 2
      }
    }
  }
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

Eigen::SparseMatrix<double> DriftNoiseCoefficients::one_body() const {
  const int n = grid.point_count();
  std::vector<Eigen::Triplet<double>> t;
  for (int comp = 0; comp < components; ++comp) {
    for (int k = 0; k < kinetic.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(kinetic, k); it; ++it) {
        t.emplace_back(composite(comp, static_cast<int>(it.row())), composite(comp, static_cast<int>(it.col())),
                       it.value());
      }
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int a = 0; a < components; ++a) {
      for (int b = 0; b < components; ++b) {
        if (local[r](a, b) != 0.0) t.emplace_back(composite(a, r), composite(b, r), local[r](a, b));
      }
    }
  }
  Eigen::SparseMatrix<double> h(dimension(), dimension());
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

Eigen::SparseMatrix<Complex> DriftNoiseCoefficients::drift(Sector s) const {
  const Complex factor(0.0, s == Sector::psi ? -1.0 / hbar : 1.0 / hbar);
  return one_body().cast<Complex>() * factor;
}

Eigen::MatrixXcd DriftNoiseCoefficients::noise_matrix(Sector s, int channel) const {
  const auto& channels = noise(s);
  if (channel < 0 || channel >= static_cast<int>(channels.size())) {
    throw ConfigurationError("noise channel " + std::to_string(channel) + " out of range");
  }
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(dimension(), dimension());
  for (const auto& term : channels[channel].terms) k(term.row, term.col) += term.coefficient;
  return k;
}

std::vector<Complex> DriftNoiseCoefficients::noise_kernel(Sector s) const {
  const auto d = static_cast<std::size_t>(dimension());
  std::vector<Complex> out(d * d * d * d);
  for (const auto& channel : noise(s)) {
    for (const auto& x : channel.terms) {
      for (const auto& y : channel.terms) {
        out[((x.row * d + y.row) * d + x.col) * d + y.col] += x.coefficient * y.coefficient;
      }
    }
  }
  return out;
}

DriftNoiseCoefficients discretize_two_component(const TwoComponentModel& model, const GridSpec& grid) {
  grid.validate();
  check_units(model.hbar, model.mass);
  const int n = grid.point_count();
  require(model.potential_up.size() == static_cast<std::size_t>(n) &&
              model.potential_down.size() == static_cast<std::size_t>(n),
          "potentials must have one value per grid point");
  require(std::isfinite(model.coupling), "coupling must be finite");

  DriftNoiseCoefficients c;
  c.grid = grid;
  c.components = 2;
  c.hbar = model.hbar;
  c.mass = model.mass;
  c.kinetic = kinetic_stencil(grid, model.hbar, model.mass);
  c.local.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(2, 2));
  for (int r = 0; r < n; ++r) {
    require(std::isfinite(model.potential_up[r]) && std::isfinite(model.potential_down[r]),
            "potentials must be finite");
    c.local[r](0, 0) = model.potential_up[r];
    c.local[r](1, 1) = model.potential_down[r];
  }
  if (model.coupling == 0.0) return c;

  // Θ_ud = s(δw₁ + iδw₂), Θ_du = s(δw₁ − iδw₂) for ψ; Θ⁺_ud = s(δw₃ + iδw₄),
  // Θ⁺_du = s(−δw₃ + iδw₄) for ψ⁺, with s = √(ig/(2ħΔV)).
  const Complex s = std::sqrt(Complex(0.0, model.coupling / (2.0 * model.hbar * grid.cell_volume())));
  const Complex i(0.0, 1.0);
  for (int r = 0; r < n; ++r) {
    const int u = c.composite(0, r), d = c.composite(1, r);
    const std::string at = "[" + std::to_string(r) + "]";
    c.psi_noise.push_back({"w_ud" + at, {{u, d, s}, {d, u, s}}});
    c.psi_noise.push_back({"w_du" + at, {{u, d, i * s}, {d, u, -i * s}}});
    c.psi_plus_noise.push_back({"w_u+d+" + at, {{u, d, s}, {d, u, -s}}});
    c.psi_plus_noise.push_back({"w_d+u+" + at, {{u, d, i * s}, {d, u, i * s}}});
  }
  return c;
}

void validate_multi_component(const MultiComponentModel& model, const GridSpec& grid, double tol) {
  grid.validate();
  check_units(model.hbar, model.mass);
  const int C = model.components, P = grid.point_count();
  require(C >= 1, "at least one component required");
  require(model.one_body.size() == static_cast<std::size_t>(P), "one-body kernel needs one matrix per grid point");
  for (int r = 0; r < P; ++r) {
    const auto& v = model.one_body[r];
    require(v.rows() == C && v.cols() == C, "one-body kernel matrix has wrong shape at point " + std::to_string(r));
    require(v.allFinite(), "one-body kernel must be finite");
    require((v - v.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, v.cwiseAbs().maxCoeff()),
            "one-body kernel not symmetric at point " + std::to_string(r));
  }
  if (model.two_body.empty()) return;
  const std::size_t expected = static_cast<std::size_t>(C) * C * C * C * P * P;
  require(model.two_body.size() == expected, "two-body kernel has " + std::to_string(model.two_body.size()) +
                                                 " entries, expected " + std::to_string(expected));
  double scale = 0.0;
  for (double x : model.two_body) {
    require(std::isfinite(x), "two-body kernel must be finite");
    scale = std::max(scale, std::abs(x));
  }
  const double bound = tol * std::max(1.0, scale);
  for (int a = 0; a < C; ++a)
    for (int b = 0; b < C; ++b)
      for (int g = 0; g < C; ++g)
        for (int d = 0; d < C; ++d)
          for (int r = 0; r < P; ++r)
            for (int s = 0; s < P; ++s) {
              const double v = model.kernel(a, b, g, d, r, s, P);
              if (std::abs(v - model.kernel(b, a, d, g, s, r, P)) > bound ||
                  std::abs(v - model.kernel(g, d, a, b, r, s, P)) > bound) {
                throw ValidationError("two-body kernel violates exchange symmetry at (" + std::to_string(a) +
                                      std::to_string(b) + ";" + std::to_string(g) + std::to_string(d) + ")(" +
                                      std::to_string(r) + "," + std::to_string(s) + ")");
              }
            }
}

Eigen::MatrixXcd interaction_matrix(const MultiComponentModel& model, const GridSpec& grid) {
  const int C = model.components, P = grid.point_count();
  const int dim = C * C * P;
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(dim, dim);
  if (model.two_body.empty()) return q;
  const Complex factor(0.0, -1.0 / model.hbar);
  for (int a = 0; a < C; ++a)
    for (int g = 0; g < C; ++g)
      for (int r = 0; r < P; ++r) {
        const int row = (a * C + g) * P + r;
        for (int b = 0; b < C; ++b)
          for (int d = 0; d < C; ++d)
            for (int s = 0; s < P; ++s) q(row, (b * C + d) * P + s) = factor * model.kernel(a, b, g, d, r, s, P);
      }
  return q;
}

DriftNoiseCoefficients discretize_multi_component(const MultiComponentModel& model, const GridSpec& grid,
                                                  double tol, int max_interaction_dimension) {
  validate_multi_component(model, grid, tol);
  const int C = model.components, P = grid.point_count();
  DriftNoiseCoefficients c;
  c.grid = grid;
  c.components = C;
  c.hbar = model.hbar;
  c.mass = model.mass;
  c.kinetic = kinetic_stencil(grid, model.hbar, model.mass);
  c.local = model.one_body;
  if (model.two_body.empty()) return c;
  if (C * C * P > max_interaction_dimension) {
    throw ConfigurationError("interaction matrix dimension " + std::to_string(C * C * P) + " exceeds bound " +
                             std::to_string(max_interaction_dimension));
  }
  const TakagiFactor f = takagi_factor(interaction_matrix(model, grid), tol);
  const Complex i(0.0, 1.0);
  for (Eigen::Index a = 0; a < f.K.cols(); ++a) {
    NoiseChannel psi{"takagi[" + std::to_string(a) + "]", {}};
    NoiseChannel plus{"takagi+[" + std::to_string(a) + "]", {}};
    for (int al = 0; al < C; ++al)
      for (int g = 0; g < C; ++g)
        for (int r = 0; r < P; ++r) {
          const Complex k = f.K((al * C + g) * P + r, a);
          if (k == Complex{}) continue;
          psi.terms.push_back({c.composite(al, r), c.composite(g, r), k});
          plus.terms.push_back({c.composite(al, r), c.composite(g, r), i * k});
        }
    c.psi_noise.push_back(std::move(psi));
    c.psi_plus_noise.push_back(std::move(plus));
  }
  return c;
}

MultiComponentModel contact_as_multi_component(const TwoComponentModel& model, const GridSpec& grid,
                                               bool exchange_form) {
  const int P = grid.point_count();
  MultiComponentModel m;
  m.components = 2;
  m.mass = model.mass;
  m.hbar = model.hbar;
  m.one_body.assign(static_cast<std::size_t>(P), Eigen::MatrixXd::Zero(2, 2));
  for (int r = 0; r < P; ++r) {
    m.one_body[r](0, 0) = model.potential_up.at(r);
    m.one_body[r](1, 1) = model.potential_down.at(r);
  }
  if (model.coupling == 0.0) return m;
  m.two_body.assign(static_cast<std::size_t>(16) * P * P, 0.0);
  const double v = model.coupling / grid.cell_volume();
  for (int r = 0; r < P; ++r) {
    if (exchange_form) {
      m.two_body[m.two_body_index(0, 1, 1, 0, r, r, P)] = -v;
      m.two_body[m.two_body_index(1, 0, 0, 1, r, r, P)] = -v;
    } else {
      m.two_body[m.two_body_index(0, 1, 0, 1, r, r, P)] = v;
      m.two_body[m.two_body_index(1, 0, 1, 0, r, r, P)] = v;
    }
  }
  return m;
}

ModeHamiltonian mode_hamiltonian(const TwoComponentModel& model, const GridSpec& grid) {
  const auto c = discretize_two_component(TwoComponentModel{model.mass, model.hbar, model.potential_up,
                                                            model.potential_down, 0.0},
                                          grid);
  ModeHamiltonian h(c.dimension(), model.hbar);
  h.one_body = Eigen::MatrixXd(c.one_body()).cast<Complex>();
  if (model.coupling != 0.0) {
    const double u = model.coupling / grid.cell_volume();
    for (int r = 0; r < grid.point_count(); ++r) {
      const int up = c.composite(0, r), down = c.composite(1, r);
      h.two_body.push_back({up, down, down, up, u});  // U n_u n_d
    }
  }
  return h;
}

ModeHamiltonian mode_hamiltonian(const MultiComponentModel& model, const GridSpec& grid) {
  MultiComponentModel free = model;
  free.two_body.clear();
  const auto c = discretize_multi_component(free, grid);
  ModeHamiltonian h(c.dimension(), model.hbar);
  h.one_body = Eigen::MatrixXd(c.one_body()).cast<Complex>();
  if (model.two_body.empty()) return h;
  const int C = model.components, P = grid.point_count();
  // ½ Σ V^{αβ;γδ}(r,s) c†_{αr} c†_{βs} c_{δs} c_{γr}
  for (int a = 0; a < C; ++a)
    for (int b = 0; b < C; ++b)
      for (int g = 0; g < C; ++g)
        for (int d = 0; d < C; ++d)
          for (int r = 0; r < P; ++r)
            for (int s = 0; s < P; ++s) {
              const double v = model.kernel(a, b, g, d, r, s, P);
              if (v == 0.0) continue;
              h.two_body.push_back({c.composite(a, r), c.composite(b, s), c.composite(d, s), c.composite(g, r), 0.5 * v});
            }
  return h;
}

}  // namespace fermiphase
