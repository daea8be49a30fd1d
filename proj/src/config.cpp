#include "fermiphase/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fermiphase/error.hpp"
#include "fermiphase/fock.hpp"

namespace fermiphase {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "fermiphase 0.1.0";

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string join(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  require_object(obj, path);
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing");
  return *it;
}

const json* optional_member(const json& obj, const std::string& key, const std::string& path) {
  require_object(obj, path);
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
      fail(join(path, it.key()), "unknown field");
    }
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

double positive(const json& j, const std::string& path) {
  const double x = number(j, path);
  if (!(x > 0.0)) fail(path, "must be positive");
  return x;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long long>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  const json* v = optional_member(obj, key, path);
  return v ? number(*v, join(path, key)) : fallback;
}

Complex complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], join(path, 0)), number(j[1], join(path, 1))};
  fail(path, "expected a number or [re, im]");
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], join(path, i)));
  return out;
}

PotentialSpec parse_potential(const json& j, const std::string& path, const GridSpec& grid) {
  require_object(j, path);
  const std::string kind = string(member(j, "kind", path), join(path, "kind"));
  PotentialSpec p;
  if (kind == "none") {
    reject_unknown(j, path, {"kind"});
  } else if (kind == "harmonic") {
    reject_unknown(j, path, {"kind", "omega"});
    p.kind = PotentialKind::harmonic;
    p.omega = number(member(j, "omega", path), join(path, "omega"));
  } else if (kind == "sin2") {
    reject_unknown(j, path, {"kind", "depth", "wavevector"});
    p.kind = PotentialKind::sin2;
    p.depth = number(member(j, "depth", path), join(path, "depth"));
    p.lattice_wavevector = number(member(j, "wavevector", path), join(path, "wavevector"));
  } else if (kind == "tabulated") {
    reject_unknown(j, path, {"kind", "values"});
    p.kind = PotentialKind::tabulated;
    p.values = number_list(member(j, "values", path), join(path, "values"));
    if (static_cast<int>(p.values.size()) != grid.point_count()) {
      fail(join(path, "values"), "expected " + std::to_string(grid.point_count()) + " values, got " +
                                     std::to_string(p.values.size()));
    }
  } else {
    fail(join(path, "kind"), "unknown potential '" + kind + "' (none, harmonic, sin2, tabulated)");
  }
  return p;
}

GridSpec parse_grid(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"dimension", "points", "spacing"});
  GridSpec g;
  g.dimension = static_cast<int>(integer(member(j, "dimension", path), join(path, "dimension")));
  g.points_per_axis = static_cast<int>(integer(member(j, "points", path), join(path, "points")));
  g.spacing = positive(member(j, "spacing", path), join(path, "spacing"));
  try {
    g.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return g;
}

// Two-body entries listed explicitly; every symmetry partner must be present.
void parse_kernel_entries(const json& j, const std::string& path, MultiComponentModel& m, int P) {
  if (!j.is_array()) fail(path, "expected an array of entries");
  const int C = m.components;
  m.two_body.assign(static_cast<std::size_t>(C) * C * C * C * P * P, 0.0);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = join(path, i);
    require_object(j[i], p);
    reject_unknown(j[i], p, {"components", "points", "value"});
    const json& comps = member(j[i], "components", p);
    const json& points = member(j[i], "points", p);
    if (!comps.is_array() || comps.size() != 4) fail(join(p, "components"), "expected [alpha, beta, gamma, delta]");
    if (!points.is_array() || points.size() != 2) fail(join(p, "points"), "expected [r, s]");
    int c[4], r[2];
    for (int k = 0; k < 4; ++k) {
      c[k] = static_cast<int>(integer(comps[k], join(join(p, "components"), k)));
      if (c[k] < 0 || c[k] >= C) fail(join(join(p, "components"), k), "component out of range");
    }
    for (int k = 0; k < 2; ++k) {
      r[k] = static_cast<int>(integer(points[k], join(join(p, "points"), k)));
      if (r[k] < 0 || r[k] >= P) fail(join(join(p, "points"), k), "grid point out of range");
    }
    m.two_body[m.two_body_index(c[0], c[1], c[2], c[3], r[0], r[1], P)] =
        number(member(j[i], "value", p), join(p, "value"));
  }
}

Slot parse_slot(const json& j, const std::string& path, const ExperimentConfig& cfg, Basis basis) {
  Slot s;
  if (j.is_array()) {
    if (j.size() != 2) fail(path, "expected [component, index]");
    s.component = static_cast<int>(integer(j[0], join(path, 0)));
    s.index = static_cast<int>(integer(j[1], join(path, 1)));
  } else if (j.is_object()) {
    reject_unknown(j, path, {"component", "point", "k"});
    s.component = static_cast<int>(integer(member(j, "component", path), join(path, "component")));
    const json* point = optional_member(j, "point", path);
    const json* k = optional_member(j, "k", path);
    if ((point == nullptr) == (k == nullptr)) fail(path, "give exactly one of 'point' and 'k'");
    if (point) {
      s.index = static_cast<int>(integer(*point, join(path, "point")));
    } else {
      if (basis != Basis::momentum) fail(join(path, "k"), "wavevectors are only valid for momentum slots");
      const auto kv = number_list(*k, join(path, "k"));
      if (static_cast<int>(kv.size()) != cfg.grid.dimension) fail(join(path, "k"), "wrong number of components");
      std::array<double, 3> kk{0.0, 0.0, 0.0};
      std::copy(kv.begin(), kv.end(), kk.begin());
      try {
        s.index = momentum_index(cfg.grid, kk);
      } catch (const ValidationError& e) {
        fail(join(path, "k"), e.what());
      }
    }
  } else {
    fail(path, "expected [component, index] or an object");
  }
  if (s.component < 0 || s.component >= cfg.components()) fail(path, "component out of range");
  if (s.index < 0 || s.index >= cfg.grid.point_count()) fail(path, "index outside the grid");
  return s;
}

std::vector<Slot> parse_slots(const json& j, const std::string& path, const ExperimentConfig& cfg, Basis basis) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of slots");
  std::vector<Slot> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_slot(j[i], join(path, i), cfg, basis));
  return out;
}

Basis parse_basis(const json& j, const std::string& path) {
  const std::string b = string(j, path);
  if (b == "position") return Basis::position;
  if (b == "momentum") return Basis::momentum;
  fail(path, "expected 'position' or 'momentum'");
}

void parse_model(const json& j, const std::string& path, ExperimentConfig& cfg) {
  require_object(j, path);
  const std::string type = string(member(j, "type", path), join(path, "type"));
  const double hbar = number_or(j, "hbar", path, 1.0);
  const double mass = number_or(j, "mass", path, 1.0);
  if (!(hbar > 0.0)) fail(join(path, "hbar"), "must be positive");
  if (!(mass > 0.0)) fail(join(path, "mass"), "must be positive");
  const int P = cfg.grid.point_count();
  if (type == "two-component") {
    reject_unknown(j, path, {"type", "hbar", "mass", "coupling", "potential", "potential_up", "potential_down"});
    cfg.multi_component = false;
    auto& m = cfg.two;
    m.hbar = hbar;
    m.mass = mass;
    m.coupling = number(member(j, "coupling", path), join(path, "coupling"));
    PotentialSpec shared;
    if (const json* v = optional_member(j, "potential", path)) shared = parse_potential(*v, join(path, "potential"), cfg.grid);
    PotentialSpec up = shared, down = shared;
    if (const json* v = optional_member(j, "potential_up", path)) up = parse_potential(*v, join(path, "potential_up"), cfg.grid);
    if (const json* v = optional_member(j, "potential_down", path))
      down = parse_potential(*v, join(path, "potential_down"), cfg.grid);
    m.potential_up = up.sample(cfg.grid, mass);
    m.potential_down = down.sample(cfg.grid, mass);
  } else if (type == "multi-component") {
    reject_unknown(j, path, {"type", "hbar", "mass", "components", "one_body", "two_body"});
    cfg.multi_component = true;
    auto& m = cfg.multi;
    m.hbar = hbar;
    m.mass = mass;
    m.components = static_cast<int>(integer(member(j, "components", path), join(path, "components")));
    if (m.components < 1) fail(join(path, "components"), "must be at least 1");
    const int C = m.components;
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(C, C);
    PotentialSpec potential;
    if (const json* ob = optional_member(j, "one_body", path)) {
      const std::string p = join(path, "one_body");
      require_object(*ob, p);
      reject_unknown(*ob, p, {"matrix", "potential"});
      if (const json* mat = optional_member(*ob, "matrix", p)) {
        const std::string mp = join(p, "matrix");
        if (!mat->is_array() || static_cast<int>(mat->size()) != C) fail(mp, "expected a components × components array");
        for (int a = 0; a < C; ++a) {
          const auto row = number_list((*mat)[a], join(mp, a));
          if (static_cast<int>(row.size()) != C) fail(join(mp, a), "wrong row length");
          for (int b = 0; b < C; ++b) coupling(a, b) = row[b];
        }
      }
      if (const json* v = optional_member(*ob, "potential", p)) potential = parse_potential(*v, join(p, "potential"), cfg.grid);
    }
    const auto pot = potential.sample(cfg.grid, mass);
    m.one_body.assign(P, coupling);
    for (int r = 0; r < P; ++r) m.one_body[r] += pot[r] * Eigen::MatrixXd::Identity(C, C);
    if (const json* tb = optional_member(j, "two_body", path)) {
      const std::string p = join(path, "two_body");
      require_object(*tb, p);
      reject_unknown(*tb, p, {"contact", "entries"});
      const json* contact = optional_member(*tb, "contact", p);
      const json* entries = optional_member(*tb, "entries", p);
      if ((contact == nullptr) == (entries == nullptr)) fail(p, "give exactly one of 'contact' and 'entries'");
      if (contact) {
        const std::string cp = join(p, "contact");
        require_object(*contact, cp);
        reject_unknown(*contact, cp, {"g", "form"});
        if (C != 2) fail(cp, "contact interaction needs exactly 2 components");
        TwoComponentModel two;
        two.hbar = hbar;
        two.mass = mass;
        two.coupling = number(member(*contact, "g", cp), join(cp, "g"));
        two.potential_up.assign(P, 0.0);
        two.potential_down.assign(P, 0.0);
        bool exchange = false;
        if (const json* f = optional_member(*contact, "form", cp)) {
          const std::string form = string(*f, join(cp, "form"));
          if (form != "direct" && form != "exchange") fail(join(cp, "form"), "expected 'direct' or 'exchange'");
          exchange = form == "exchange";
        }
        m.two_body = contact_as_multi_component(two, cfg.grid, exchange).two_body;
      } else {
        parse_kernel_entries(*entries, join(p, "entries"), m, P);
      }
    }
    try {
      validate_multi_component(m, cfg.grid, cfg.takagi_tolerance);
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  } else {
    fail(join(path, "type"), "expected 'two-component' or 'multi-component'");
  }
}

void parse_scheme(const json& j, const std::string& path, ExperimentConfig& cfg) {
  require_object(j, path);
  reject_unknown(j, path, {"kind", "dt", "steps", "dispersion", "checkpoint_every"});
  const std::string kind = string(member(j, "kind", path), join(path, "kind"));
  if (kind == "euler") {
    cfg.scheme.kind = SchemeKind::euler;
  } else if (kind == "split-step") {
    cfg.scheme.kind = SchemeKind::split_step_fourier;
  } else if (kind == "bloch-basis") {
    cfg.scheme.kind = SchemeKind::bloch_basis;
  } else {
    fail(join(path, "kind"), "expected 'euler', 'split-step' or 'bloch-basis'");
  }
  cfg.scheme.dt = positive(member(j, "dt", path), join(path, "dt"));
  const long long steps = integer(member(j, "steps", path), join(path, "steps"));
  if (steps < 1 || steps > 100000000) fail(join(path, "steps"), "must be in [1, 1e8]");
  cfg.scheme.steps = static_cast<int>(steps);
  if (const json* d = optional_member(j, "dispersion", path)) {
    const std::string disp = string(*d, join(path, "dispersion"));
    if (disp == "stencil") {
      cfg.scheme.dispersion = Dispersion::stencil;
    } else if (disp == "continuum") {
      cfg.scheme.dispersion = Dispersion::continuum;
    } else {
      fail(join(path, "dispersion"), "expected 'stencil' or 'continuum'");
    }
  }
  if (const json* c = optional_member(j, "checkpoint_every", path)) {
    const long long every = integer(*c, join(path, "checkpoint_every"));
    if (every < 1) fail(join(path, "checkpoint_every"), "must be at least 1");
    cfg.checkpoint_every = static_cast<int>(std::min<long long>(every, steps));
  }
}

void parse_ensemble(const json& j, const std::string& path, ExperimentConfig& cfg) {
  require_object(j, path);
  reject_unknown(j, path, {"trajectories", "seed", "divergence_ceiling", "block_size"});
  const long long n = integer(member(j, "trajectories", path), join(path, "trajectories"));
  if (n < 1) fail(join(path, "trajectories"), "must be at least 1");
  cfg.ensemble.trajectories = static_cast<std::uint64_t>(n);
  const json& seed = member(j, "seed", path);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    fail(join(path, "seed"), "expected a non-negative integer");
  }
  cfg.ensemble.seed = seed.get<std::uint64_t>();
  cfg.ensemble.divergence_ceiling = number_or(j, "divergence_ceiling", path, 0.01);
  if (cfg.ensemble.divergence_ceiling < 0.0 || cfg.ensemble.divergence_ceiling > 1.0) {
    fail(join(path, "divergence_ceiling"), "must be in [0, 1]");
  }
  if (const json* b = optional_member(j, "block_size", path)) {
    const long long bs = integer(*b, join(path, "block_size"));
    if (bs < 1) fail(join(path, "block_size"), "must be at least 1");
    cfg.ensemble.block_size = static_cast<std::uint64_t>(bs);
  }
}

void parse_initial_state(const json& j, const std::string& path, ExperimentConfig& cfg) {
  require_object(j, path);
  reject_unknown(j, path, {"basis", "terms"});
  if (const json* b = optional_member(j, "basis", path)) cfg.initial_basis = parse_basis(*b, join(path, "basis"));
  const json& terms = member(j, "terms", path);
  const std::string tp = join(path, "terms");
  if (!terms.is_array() || terms.empty()) fail(tp, "expected a non-empty array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string p = join(tp, i);
    require_object(terms[i], p);
    reject_unknown(terms[i], p, {"amplitude", "modes"});
    StateTerm t;
    t.amplitude = terms[i].contains("amplitude") ? complex_value(terms[i]["amplitude"], join(p, "amplitude")) : 1.0;
    t.modes = parse_slots(member(terms[i], "modes", p), join(p, "modes"), cfg, cfg.initial_basis);
    if (!cfg.initial_terms.empty() && t.modes.size() != cfg.initial_terms.front().modes.size()) {
      fail(join(p, "modes"), "all terms need the same particle number");
    }
    cfg.initial_terms.push_back(std::move(t));
  }
}

void parse_observables(const json& j, const std::string& path, ExperimentConfig& cfg) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
  const std::size_t p0 = cfg.initial_terms.front().modes.size();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = join(path, i);
    require_object(j[i], p);
    ObservableRequest r;
    r.id = string(member(j[i], "id", p), join(p, "id"));
    if (r.id.empty() || !std::all_of(r.id.begin(), r.id.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        })) {
      fail(join(p, "id"), "ids use letters, digits, '_', '-' and '.' only");
    }
    for (const auto& other : cfg.observables) {
      if (other.id == r.id) fail(join(p, "id"), "duplicate id '" + r.id + "'");
    }
    const std::string kind = string(member(j[i], "kind", p), join(p, "kind"));
    if (kind == "population") {
      reject_unknown(j[i], p, {"id", "kind", "slots"});
      r.kind = ObservableKind::population;
      r.bra = parse_slots(member(j[i], "slots", p), join(p, "slots"), cfg, Basis::position);
      r.ket = r.bra;
    } else if (kind == "coherence" || kind == "momentum") {
      reject_unknown(j[i], p, {"id", "kind", "bra", "ket"});
      r.kind = kind == "coherence" ? ObservableKind::coherence : ObservableKind::momentum;
      const Basis b = kind == "coherence" ? Basis::position : Basis::momentum;
      r.bra = parse_slots(member(j[i], "bra", p), join(p, "bra"), cfg, b);
      r.ket = parse_slots(member(j[i], "ket", p), join(p, "ket"), cfg, b);
      if (r.bra.size() != r.ket.size()) fail(p, "bra and ket need the same particle number");
    } else {
      fail(join(p, "kind"), "expected 'population', 'coherence' or 'momentum'");
    }
    if (r.bra.size() != p0) {
      fail(p, "requests " + std::to_string(r.bra.size()) + " particles but the initial state has " +
                  std::to_string(p0));
    }
    cfg.observables.push_back(std::move(r));
  }
}

void parse_output(const json& j, const std::string& path, ExperimentConfig& cfg) {
  require_object(j, path);
  reject_unknown(j, path, {"dir", "name", "formats", "plot"});
  if (const json* d = optional_member(j, "dir", path)) cfg.output.directory = string(*d, join(path, "dir"));
  if (const json* n = optional_member(j, "name", path)) {
    cfg.output.name = string(*n, join(path, "name"));
    if (cfg.output.name.empty() || cfg.output.name.find('/') != std::string::npos) fail(join(path, "name"), "invalid file stem");
  }
  if (const json* f = optional_member(j, "formats", path)) {
    const std::string fp = join(path, "formats");
    if (!f->is_array() || f->empty()) fail(fp, "expected a non-empty array");
    cfg.output.csv = cfg.output.json = false;
    for (std::size_t i = 0; i < f->size(); ++i) {
      const std::string name = string((*f)[i], join(fp, i));
      if (name == "csv") {
        cfg.output.csv = true;
      } else if (name == "json") {
        cfg.output.json = true;
      } else {
        fail(join(fp, i), "expected 'csv' or 'json'");
      }
    }
  }
  if (const json* pl = optional_member(j, "plot", path)) {
    if (!pl->is_boolean()) fail(join(path, "plot"), "expected true or false");
    cfg.output.plot = pl->get<bool>();
  }
}

std::string fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// Per-trajectory evaluation of one request from a sparse initial tensor.
struct RequestPlan {
  std::vector<int> bra_rows;  // rows of the (possibly transformed) ψ propagator
  std::vector<int> ket_rows;
  bool momentum = false;
  double scale = 1.0;
};

struct SparseMoments {
  int order = 0;
  int dimension = 0;
  std::vector<std::vector<int>> rows;  // distinct ψ multi-indices with a nonzero entry
  std::vector<std::vector<int>> cols;
  std::vector<std::tuple<int, int, Complex>> entries;  // (row id, col id, value)
};

SparseMoments sparsify(const MomentTensor& m) {
  SparseMoments s;
  s.order = m.order();
  s.dimension = m.dimension();
  std::size_t count = 1;
  for (int i = 0; i < s.order; ++i) count *= static_cast<std::size_t>(s.dimension);
  std::map<std::size_t, int> row_id, col_id;
  auto unflatten = [&](std::size_t flat) {
    std::vector<int> idx(static_cast<std::size_t>(s.order));
    for (int i = s.order - 1; i >= 0; --i) {
      idx[static_cast<std::size_t>(i)] = static_cast<int>(flat % static_cast<std::size_t>(s.dimension));
      flat /= static_cast<std::size_t>(s.dimension);
    }
    return idx;
  };
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = 0; b < count; ++b) {
      const Complex v = m[a * count + b];
      if (v == Complex{}) continue;
      auto [ri, r_new] = row_id.try_emplace(a, static_cast<int>(s.rows.size()));
      if (r_new) s.rows.push_back(unflatten(a));
      auto [ci, c_new] = col_id.try_emplace(b, static_cast<int>(s.cols.size()));
      if (c_new) s.cols.push_back(unflatten(b));
      s.entries.emplace_back(ri->second, ci->second, v);
    }
  }
  return s;
}

Complex contract(const SparseMoments& m, const RowMatrix& psi, const RowMatrix& psi_plus, const RequestPlan& plan,
                 std::vector<Complex>& x, std::vector<Complex>& y) {
  x.assign(m.rows.size(), Complex{});
  y.assign(m.cols.size(), Complex{});
  for (std::size_t a = 0; a < m.rows.size(); ++a) {
    Complex v = 1.0;
    for (std::size_t i = 0; i < plan.bra_rows.size(); ++i) v *= psi(plan.bra_rows[i], m.rows[a][i]);
    x[a] = v;
  }
  for (std::size_t b = 0; b < m.cols.size(); ++b) {
    Complex v = 1.0;
    for (std::size_t i = 0; i < plan.ket_rows.size(); ++i) v *= psi_plus(plan.ket_rows[i], m.cols[b][i]);
    y[b] = v;
  }
  Complex sum{};
  for (const auto& [a, b, v] : m.entries) sum += v * x[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(b)];
  return sum * plan.scale;
}

std::vector<RequestPlan> plan_requests(const ExperimentConfig& cfg) {
  const TensorLayout layout = cfg.layout();
  const double dv = cfg.grid.cell_volume();
  std::vector<RequestPlan> plans;
  for (const auto& r : cfg.observables) {
    RequestPlan p;
    p.momentum = r.kind == ObservableKind::momentum;
    for (const auto& s : r.bra) p.bra_rows.push_back(layout.composite(s));
    for (const auto& s : r.ket) p.ket_rows.push_back(layout.composite(s));
    p.scale = p.momentum ? 1.0 : std::pow(dv, static_cast<double>(r.bra.size()));
    plans.push_back(std::move(p));
  }
  return plans;
}

json metadata(const ExperimentConfig& cfg, const std::string& kind) {
  json m;
  m["config_hash"] = config_hash(cfg);
  m["model_hash"] = model_hash(cfg);
  m["version"] = kVersion;
  m["seed"] = cfg.ensemble.seed;
  m["kind"] = kind;
  m["partial"] = false;
  return m;
}

fock::StateVector initial_state_vector(const ExperimentConfig& cfg) {
  const TensorLayout layout = cfg.layout();
  const int n = layout.dimension();
  fock::StateVector psi = fock::StateVector::Zero(std::int64_t{1} << n);
  const int P = cfg.grid.point_count();
  for (const auto& t : cfg.initial_terms) {
    std::vector<int> modes;
    for (const auto& s : t.modes) modes.push_back(layout.composite(s));
    if (cfg.initial_basis == Basis::position) {
      psi += t.amplitude * fock::fock_state(n, modes);
      continue;
    }
    // c†_k = Σ_r e^{ik·r}/√P c†_r within the slot's component.
    const std::size_t p = modes.size();
    std::vector<int> r(p, 0);
    for (;;) {
      Complex coefficient = t.amplitude;
      std::vector<int> grid_modes(p);
      for (std::size_t i = 0; i < p; ++i) {
        const auto k = cfg.grid.wavevector(t.modes[i].index);
        const auto x = cfg.grid.position(r[i]);
        double phase = 0.0;
        for (int a = 0; a < cfg.grid.dimension; ++a) phase += k[a] * x[a];
        coefficient *= std::polar(1.0 / std::sqrt(static_cast<double>(P)), phase);
        grid_modes[i] = layout.composite({t.modes[i].component, r[i]});
      }
      psi += coefficient * fock::fock_state(n, grid_modes);
      std::size_t i = 0;
      while (i < p && ++r[i] == P) r[i++] = 0;
      if (i == p) break;
    }
  }
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw ValidationError("initial_state: state has zero norm");
  return psi / norm;
}

}  // namespace

std::vector<int> ExperimentConfig::checkpoints() const {
  std::vector<int> out{0};
  const int every = checkpoint_every > 0 ? checkpoint_every : scheme.steps;
  for (int s = every; s < scheme.steps; s += every) out.push_back(s);
  out.push_back(scheme.steps);
  return out;
}

int ExperimentConfig::particle_number() const {
  return initial_terms.empty() ? 0 : static_cast<int>(initial_terms.front().modes.size());
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.source = j;
  require_object(j, "config");
  reject_unknown(j, "config", {"model", "grid", "scheme", "ensemble", "initial_state", "observables", "output"});
  cfg.grid = parse_grid(member(j, "grid", "config"), "grid");
  parse_model(member(j, "model", "config"), "model", cfg);
  parse_scheme(member(j, "scheme", "config"), "scheme", cfg);
  parse_ensemble(member(j, "ensemble", "config"), "ensemble", cfg);
  parse_initial_state(member(j, "initial_state", "config"), "initial_state", cfg);
  parse_observables(member(j, "observables", "config"), "observables", cfg);
  if (const json* o = optional_member(j, "output", "config")) parse_output(*o, "output", cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

DriftNoiseCoefficients build_coefficients(const ExperimentConfig& cfg) {
  if (cfg.multi_component) return discretize_multi_component(cfg.multi, cfg.grid, cfg.takagi_tolerance);
  return discretize_two_component(cfg.two, cfg.grid);
}

ModeHamiltonian build_mode_hamiltonian(const ExperimentConfig& cfg) {
  return cfg.multi_component ? mode_hamiltonian(cfg.multi, cfg.grid) : mode_hamiltonian(cfg.two, cfg.grid);
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = cfg.source;
  j.erase("output");
  return fnv1a(j.dump());
}

std::string model_hash(const ExperimentConfig& cfg) {
  json j;
  for (const char* key : {"model", "grid", "initial_state", "observables"}) {
    if (cfg.source.contains(key)) j[key] = cfg.source[key];
  }
  j["dt"] = cfg.scheme.dt;
  j["checkpoints"] = cfg.checkpoints();
  return fnv1a(j.dump());
}

ResultTable run_stochastic(const ExperimentConfig& cfg) {
  const TensorLayout layout = cfg.layout();
  const DriftNoiseCoefficients coeffs = build_coefficients(cfg);
  const Propagator propagator(coeffs, cfg.scheme);
  const SparseMoments m0 = sparsify(initial_moments(cfg.initial_terms, cfg.initial_basis, layout));
  const auto plans = plan_requests(cfg);
  const bool any_momentum = std::any_of(plans.begin(), plans.end(), [](const RequestPlan& p) { return p.momentum; });
  const Eigen::MatrixXcd F = any_momentum ? psi_momentum_transform(layout) : Eigen::MatrixXcd();
  const Eigen::MatrixXcd Fp = any_momentum ? psi_plus_momentum_transform(layout) : Eigen::MatrixXcd();
  const auto checkpoints = cfg.checkpoints();

  const TrajectoryEvaluator evaluate = [&](std::size_t, const TrajectoryPropagator& tp, std::span<Complex> out) {
    std::vector<Complex> x, y;
    RowMatrix psi_k, psi_plus_k;
    if (any_momentum) {
      psi_k = F * tp.T;
      psi_plus_k = Fp * tp.T_plus;
    }
    for (std::size_t i = 0; i < plans.size(); ++i) {
      out[i] = plans[i].momentum ? contract(m0, psi_k, psi_plus_k, plans[i], x, y)
                                 : contract(m0, tp.T, tp.T_plus, plans[i], x, y);
    }
  };
  const EnsembleResult result = run_ensemble(propagator, cfg.ensemble, checkpoints, plans.size(), evaluate);

  ResultTable table;
  table.metadata = metadata(cfg, "stochastic");
  table.metadata["partial"] = result.aborted;
  table.metadata["trajectories_requested"] = cfg.ensemble.trajectories;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const ComplexStats& s = result.checkpoints[c];
    for (std::size_t i = 0; i < plans.size(); ++i) {
      ResultRow row;
      row.observable_id = cfg.observables[i].id;
      row.t = checkpoints[c] * cfg.scheme.dt;
      if (s.count() > 0) {
        row.re = s.mean()[i].real();
        row.im = s.mean()[i].imag();
        row.stderr_re = s.stderr_re(i);
        row.stderr_im = s.stderr_im(i);
      }
      row.n_traj = s.count();
      row.n_excluded = result.n_excluded;
      table.rows.push_back(row);
    }
  }
  table.sort();
  return table;
}

ResultTable run_exact(const ExperimentConfig& cfg) {
  const TensorLayout layout = cfg.layout();
  if (layout.dimension() > fock::kMaxModes) {
    throw ValidationError("model: exact evaluation supports at most " + std::to_string(fock::kMaxModes) +
                          " modes, the config has " + std::to_string(layout.dimension()));
  }
  const fock::ExactEvolver evolver(build_mode_hamiltonian(cfg));
  const fock::DensityMatrix rho0 = fock::pure_density(initial_state_vector(cfg));
  const int p = cfg.particle_number();
  const auto plans = plan_requests(cfg);
  const bool any_momentum = std::any_of(plans.begin(), plans.end(), [](const RequestPlan& q) { return q.momentum; });
  const Eigen::MatrixXcd F = psi_momentum_transform(layout);
  const Eigen::MatrixXcd Fp = psi_plus_momentum_transform(layout);
  const double field_scale = 1.0 / std::pow(cfg.grid.cell_volume(), static_cast<double>(p));

  ResultTable table;
  table.metadata = metadata(cfg, "exact");
  for (int step : cfg.checkpoints()) {
    const double t = step * cfg.scheme.dt;
    const fock::DensityMatrix rho = evolver.evolve(rho0, t);
    MomentTensor momentum;
    if (any_momentum) {
      MomentTensor field = fock::exact_moment_tensor(rho, p);
      for (auto& v : field.data()) v *= field_scale;
      momentum = transform_moment(field, F, Fp);
    }
    for (std::size_t i = 0; i < plans.size(); ++i) {
      Complex v;
      if (plans[i].momentum) {
        v = momentum.at(plans[i].bra_rows, plans[i].ket_rows);
      } else {
        v = fock::exact_coherence(rho, plans[i].bra_rows, plans[i].ket_rows);
      }
      ResultRow row;
      row.observable_id = cfg.observables[i].id;
      row.t = t;
      row.re = v.real();
      row.im = v.imag();
      table.rows.push_back(row);
    }
  }
  table.sort();
  return table;
}

}  // namespace fermiphase
