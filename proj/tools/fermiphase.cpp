#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fermiphase/config.hpp"
#include "fermiphase/error.hpp"
#include "fermiphase/results.hpp"
#include "fermiphase/selftest.hpp"

namespace fp = fermiphase;

namespace {

enum Exit { kPass = 0, kValidation = 1, kAbort = 2, kComparison = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format;
  bool plot = false;
};

fp::ExperimentConfig load(const Common& c) {
  nlohmann::json j;
  {
    std::ifstream in(c.config);
    if (!in) throw fp::ValidationError(c.config + ": cannot open config");
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw fp::ValidationError(c.config + ": " + e.what());
    }
  }
  // --seed replaces the config value so the hash records the seed actually used.
  if (c.seed && j.is_object() && j.contains("ensemble") && j["ensemble"].is_object()) j["ensemble"]["seed"] = *c.seed;
  fp::ExperimentConfig cfg = fp::parse_config(j);
  if (!c.out_dir.empty()) cfg.output.directory = c.out_dir;
  if (!c.format.empty()) {
    cfg.output.csv = c.format == "csv" || c.format == "both";
    cfg.output.json = c.format == "json" || c.format == "both";
  }
  cfg.output.plot = cfg.output.plot || c.plot;
  return cfg;
}

void emit(const fp::ResultTable& table, const fp::ExperimentConfig& cfg, const std::string& suffix) {
  const auto stem = cfg.output.directory / (cfg.output.name + suffix);
  if (cfg.output.csv) fp::write_text(stem.string() + ".csv", table.to_csv());
  if (cfg.output.json) fp::write_text(stem.string() + ".json", table.to_json().dump(2) + "\n");
  if (cfg.output.plot) fp::write_text(stem.string() + ".svg", fp::render_svg(table));
  std::cerr << "wrote " << stem.string() << " (" << table.rows.size() << " rows)\n";
}

void add_common(CLI::App* cmd, Common& c, bool stochastic) {
  cmd->add_option("config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  if (stochastic) cmd->add_option("--seed", c.seed, "master seed (overrides ensemble.seed)");
  cmd->add_option("--out-dir", c.out_dir, "output directory (overrides output.dir)");
  cmd->add_option("--format", c.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  cmd->add_flag("--plot", c.plot, "also write an SVG of estimate ± stderr against time");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grassmann phase-space simulator for lattice Fermi gases"};
  app.require_subcommand(1);

  Common run_opts, exact_opts;
  auto* run = app.add_subcommand("run", "stochastic ensemble run");
  add_common(run, run_opts, true);
  auto* exact = app.add_subcommand("exact", "exact Fock-space evaluation of the same observables");
  add_common(exact, exact_opts, false);

  std::string stochastic_path, exact_path, report_path;
  double threshold = 3.0;
  bool force = false;
  auto* compare = app.add_subcommand("compare", "z-scores of a stochastic table against an exact table");
  compare->add_option("stochastic", stochastic_path)->required()->check(CLI::ExistingFile);
  compare->add_option("exact", exact_path)->required()->check(CLI::ExistingFile);
  compare->add_option("--threshold", threshold, "pass if every z is at most this")->capture_default_str();
  compare->add_flag("--force", force, "compare even if the model hashes differ");
  compare->add_option("--report", report_path, "write the JSON report here");

  std::string selftest_config;
  int samples = 20000, cases = 1000;
  std::uint64_t selftest_seed = 1;
  auto* selftest = app.add_subcommand("selftest", "algebra and noise-moment suites");
  selftest->add_option("--config", selftest_config, "model to draw noise from (default: 2-site contact model)")
      ->check(CLI::ExistingFile);
  selftest->add_option("--samples", samples, "noise samples")->capture_default_str();
  selftest->add_option("--cases", cases, "random algebra cases")->capture_default_str();
  selftest->add_option("--seed", selftest_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load(run_opts);
      const auto table = fp::run_stochastic(cfg);
      emit(table, cfg, "");
      if (table.metadata.value("partial", false)) {
        std::cerr << "aborted: excluded-trajectory fraction above the divergence ceiling; results are partial\n";
        return kAbort;
      }
      return kPass;
    }
    if (*exact) {
      const auto cfg = load(exact_opts);
      emit(fp::run_exact(cfg), cfg, "_exact");
      return kPass;
    }
    if (*compare) {
      const auto report = fp::compare_tables(fp::ResultTable::read(stochastic_path), fp::ResultTable::read(exact_path),
                                             threshold, force);
      std::cout << report.to_text();
      if (!report_path.empty()) fp::write_text(report_path, report.to_json().dump(2) + "\n");
      return report.pass ? kPass : kComparison;
    }
    if (*selftest) {
      fp::DriftNoiseCoefficients coeffs;
      double dt = 1e-3;
      if (selftest_config.empty()) {
        fp::GridSpec grid{1, 2, 1.0};
        fp::TwoComponentModel m;
        m.coupling = 1.0;
        m.potential_up = {0.3, -0.2};
        m.potential_down = {-0.1, 0.25};
        coeffs = fp::discretize_two_component(m, grid);
      } else {
        const auto cfg = fp::load_config(selftest_config);
        coeffs = fp::build_coefficients(cfg);
        dt = cfg.scheme.dt;
      }
      auto checks = fp::algebra_selftest(cases, selftest_seed);
      const auto noise = fp::noise_selftest(coeffs, samples, dt, selftest_seed);
      checks.insert(checks.end(), noise.begin(), noise.end());
      bool ok = true;
      for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << "\n";
        ok = ok && c.pass;
      }
      return ok ? kPass : kComparison;
    }
  } catch (const fp::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
