#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace fermiphase {

struct ResultRow {
  std::string observable_id;
  double t = 0.0;
  double re = 0.0;
  double im = 0.0;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
  std::uint64_t n_traj = 0;
  std::uint64_t n_excluded = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;  // sorted by (observable_id, t)
  nlohmann::json metadata = nlohmann::json::object();

  void sort();
  std::string to_csv() const;
  nlohmann::json to_json() const;
  static ResultTable from_json(const nlohmann::json& j);
  static ResultTable from_csv(const std::string& text);
  /// Reads .json or .csv by extension.
  static ResultTable read(const std::filesystem::path& path);
};

/// Shortest round-trip representation of a double.
std::string format_double(double x);

struct CompareRow {
  std::string observable_id;
  double t = 0.0;
  double z_re = 0.0;
  double z_im = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  double max_z = 0.0;
  double threshold = 3.0;
  bool pass = true;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// z = |stoch − exact| / stderr per component; a zero stderr counts as z = 0 when the values are
/// equal to 1e−12 and as infinite otherwise.  Throws ValidationError listing unmatched
/// (id, t) rows, or on mismatched model hashes unless `force`.
CompareReport compare_tables(const ResultTable& stochastic, const ResultTable& exact, double threshold = 3.0,
                             bool force = false);

/// Static SVG of estimate ± stderr against time, one panel per observable (real part).
std::string render_svg(const ResultTable& table);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fermiphase
