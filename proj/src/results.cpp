#include "fermiphase/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "fermiphase/error.hpp"

namespace fermiphase {

using nlohmann::json;

namespace {

constexpr const char* kHeader = "observable_id,t,re,im,stderr_re,stderr_im,n_traj,n_excluded";

double parse_double(const std::string& s, std::size_t line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return x;
}

std::uint64_t parse_count(const std::string& s, std::size_t line) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad count '" + s + "'");
  }
  return x;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

double z_score(double stoch, double exact, double stderr_value) {
  const double diff = std::abs(stoch - exact);
  if (stderr_value > 0.0) return diff / stderr_value;
  return diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (x == 0.0) return "0";  // folds −0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void ResultTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.observable_id != b.observable_id) return a.observable_id < b.observable_id;
    return a.t < b.t;
  });
}

std::string ResultTable::to_csv() const {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) {
    out += r.observable_id + "," + format_double(r.t) + "," + format_double(r.re) + "," + format_double(r.im) + "," +
           format_double(r.stderr_re) + "," + format_double(r.stderr_im) + "," + std::to_string(r.n_traj) + "," +
           std::to_string(r.n_excluded) + "\n";
  }
  return out;
}

json ResultTable::to_json() const {
  json j;
  j["metadata"] = metadata;
  j["columns"] = {"observable_id", "t", "re", "im", "stderr_re", "stderr_im", "n_traj", "n_excluded"};
  json out_rows = json::array();
  for (const auto& r : rows) {
    out_rows.push_back({{"observable_id", r.observable_id},
                        {"t", r.t},
                        {"re", r.re},
                        {"im", r.im},
                        {"stderr_re", r.stderr_re},
                        {"stderr_im", r.stderr_im},
                        {"n_traj", r.n_traj},
                        {"n_excluded", r.n_excluded}});
  }
  j["rows"] = std::move(out_rows);
  return j;
}

ResultTable ResultTable::from_json(const json& j) {
  ResultTable t;
  try {
    if (j.contains("metadata")) t.metadata = j.at("metadata");
    for (const auto& r : j.at("rows")) {
      t.rows.push_back({r.at("observable_id").get<std::string>(), r.at("t").get<double>(), r.at("re").get<double>(),
                        r.at("im").get<double>(), r.at("stderr_re").get<double>(), r.at("stderr_im").get<double>(),
                        r.at("n_traj").get<std::uint64_t>(), r.at("n_excluded").get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("result table: ") + e.what());
  }
  return t;
}

ResultTable ResultTable::from_csv(const std::string& text) {
  ResultTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || line != kHeader) throw ValidationError("result table: unexpected CSV header");
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw ValidationError("line " + std::to_string(n + 1) + ": expected 8 fields");
    t.rows.push_back({f[0], parse_double(f[1], n + 1), parse_double(f[2], n + 1), parse_double(f[3], n + 1),
                      parse_double(f[4], n + 1), parse_double(f[5], n + 1), parse_count(f[6], n + 1),
                      parse_count(f[7], n + 1)});
  }
  return t;
}

ResultTable ResultTable::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".csv") return from_csv(ss.str());
  try {
    return from_json(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json CompareReport::to_json() const {
  json j;
  j["threshold"] = threshold;
  j["max_z"] = std::isfinite(max_z) ? json(max_z) : json("inf");
  j["pass"] = pass;
  json out = json::array();
  for (const auto& r : rows) {
    auto z = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
    out.push_back({{"observable_id", r.observable_id}, {"t", r.t}, {"z_re", z(r.z_re)}, {"z_im", z(r.z_im)}});
  }
  j["rows"] = std::move(out);
  return j;
}

std::string CompareReport::to_text() const {
  std::ostringstream os;
  std::map<std::string, double> worst;
  for (const auto& r : rows) {
    double& w = worst[r.observable_id];
    w = std::max({w, r.z_re, r.z_im});
  }
  for (const auto& [id, z] : worst) os << id << "  max z " << format_double(z) << "\n";
  os << "rows " << rows.size() << ", max z " << format_double(max_z) << ", threshold " << format_double(threshold)
     << ": " << (pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

CompareReport compare_tables(const ResultTable& stochastic, const ResultTable& exact, double threshold, bool force) {
  if (!force) {
    const auto a = stochastic.metadata.find("model_hash");
    const auto b = exact.metadata.find("model_hash");
    if (a == stochastic.metadata.end() || b == exact.metadata.end() || *a != *b) {
      throw ValidationError("model hashes differ or are missing (use --force to compare anyway)");
    }
  }
  std::vector<bool> used(exact.rows.size(), false);
  std::set<std::string> unmatched;
  CompareReport report;
  report.threshold = threshold;
  for (const auto& s : stochastic.rows) {
    std::size_t k = 0;
    for (; k < exact.rows.size(); ++k) {
      if (!used[k] && exact.rows[k].observable_id == s.observable_id && same_time(exact.rows[k].t, s.t)) break;
    }
    if (k == exact.rows.size()) {
      unmatched.insert(s.observable_id + "@" + format_double(s.t) + " (stochastic only)");
      continue;
    }
    used[k] = true;
    const ResultRow& e = exact.rows[k];
    CompareRow r{s.observable_id, s.t, z_score(s.re, e.re, s.stderr_re), z_score(s.im, e.im, s.stderr_im)};
    report.max_z = std::max({report.max_z, r.z_re, r.z_im});
    report.rows.push_back(r);
  }
  for (std::size_t k = 0; k < exact.rows.size(); ++k) {
    if (!used[k]) unmatched.insert(exact.rows[k].observable_id + "@" + format_double(exact.rows[k].t) + " (exact only)");
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched rows:";
    for (const auto& u : unmatched) msg += " " + u;
    throw ValidationError(msg);
  }
  report.pass = report.max_z <= threshold;
  return report;
}

std::string render_svg(const ResultTable& table) {
  std::map<std::string, std::vector<const ResultRow*>> series;
  for (const auto& r : table.rows) series[r.observable_id].push_back(&r);
  const int width = 640, panel = 200, margin = 50;
  const int height = static_cast<int>(series.size()) * panel + margin;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int row = 0;
  for (const auto& [id, pts] : series) {
    double t0 = pts.front()->t, t1 = pts.front()->t, y0 = pts.front()->re, y1 = y0;
    for (const auto* p : pts) {
      t0 = std::min(t0, p->t);
      t1 = std::max(t1, p->t);
      y0 = std::min(y0, p->re - p->stderr_re);
      y1 = std::max(y1, p->re + p->stderr_re);
    }
    if (t1 == t0) t1 = t0 + 1.0;
    if (y1 - y0 < 1e-12) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    const double top = margin / 2.0 + row * panel, h = panel - margin, left = margin, w = width - 2.0 * margin;
    auto X = [&](double t) { return left + (t - t0) / (t1 - t0) * w; };
    auto Y = [&](double y) { return top + (y1 - y) / (y1 - y0) * h; };
    os << "<g>\n<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << left << "\" y=\"" << top - 6 << "\" font-size=\"12\">" << xml_escape(id) << " (re)</text>\n";
    os << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" font-size=\"10\" text-anchor=\"end\">"
       << format_double(y1) << "</text>\n";
    os << "<text x=\"" << left - 4 << "\" y=\"" << top + h << "\" font-size=\"10\" text-anchor=\"end\">"
       << format_double(y0) << "</text>\n";
    os << "<text x=\"" << left + w << "\" y=\"" << top + h + 14 << "\" font-size=\"10\" text-anchor=\"end\">t = "
       << format_double(t1) << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (const auto* p : pts) os << X(p->t) << "," << Y(p->re) << " ";
    os << "\"/>\n";
    for (const auto* p : pts) {
      if (p->stderr_re > 0.0) {
        os << "<line x1=\"" << X(p->t) << "\" x2=\"" << X(p->t) << "\" y1=\"" << Y(p->re - p->stderr_re) << "\" y2=\""
           << Y(p->re + p->stderr_re) << "\" stroke=\"#1f77b4\"/>\n";
      }
    }
    os << "</g>\n";
    ++row;
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path.string() + ": cannot write");
  out << text;
  if (!out) throw ValidationError(path.string() + ": write failed");
}

}  // namespace fermiphase
