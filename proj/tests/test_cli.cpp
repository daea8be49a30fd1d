#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "fermiphase/config.hpp"
#include "fermiphase/error.hpp"
#include "fermiphase/results.hpp"
#include "fermiphase/selftest.hpp"

using namespace fermiphase;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
  std::ifstream in(std::string(FERMIPHASE_SOURCE_DIR) + "/configs/two_site.json");
  json j = json::parse(in);
  j["ensemble"]["trajectories"] = 300;
  j["ensemble"]["block_size"] = 64;
  j["scheme"]["steps"] = 200;
  j["scheme"]["checkpoint_every"] = 50;
  return j;
}

std::string validation_message(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fermiphase_cli_test_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FERMIPHASE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("validation errors name the offending field") {
  json j = small_config();
  j["ensemble"]["trajectories"] = 0;
  CHECK(validation_message(j).find("ensemble.trajectories") != std::string::npos);

  j = small_config();
  j["ensemble"].erase("seed");
  CHECK(validation_message(j).find("ensemble.seed: missing") != std::string::npos);

  j = small_config();
  j["observables"][2]["slots"][1] = json::array({1, 5});
  CHECK(validation_message(j).find("observables[2].slots[1]") != std::string::npos);

  j = small_config();
  j["observables"][9]["bra"][0] = {{"component", 0}, {"k", {1.0}}};
  CHECK(validation_message(j).find("observables[9].bra[0].k") != std::string::npos);

  j = small_config();
  j["scheme"]["kind"] = "rk4";
  CHECK(validation_message(j).find("scheme.kind") != std::string::npos);

  j = small_config();
  j["model"]["colour"] = 1;
  CHECK(validation_message(j).find("model.colour: unknown field") != std::string::npos);

  j = small_config();
  j["observables"][1]["id"] = j["observables"][0]["id"];
  CHECK(validation_message(j).find("duplicate id") != std::string::npos);
}

TEST_CASE("momentum slots accept on-lattice wavevectors") {
  json j = small_config();
  const double dx = j["grid"]["spacing"].get<double>();
  j["observables"][9]["bra"][0] = {{"component", 0}, {"k", {std::numbers::pi / dx}}};
  const auto cfg = parse_config(j);
  CHECK(cfg.observables[9].bra[0].index == 1);
}

TEST_CASE("checkpoints include both ends") {
  const auto cfg = parse_config(small_config());
  CHECK(cfg.checkpoints() == std::vector<int>{0, 50, 100, 150, 200});
}

TEST_CASE("same config and seed give identical tables, different seeds do not") {
  const auto cfg = parse_config(small_config());
  const auto a = run_stochastic(cfg), b = run_stochastic(cfg);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_json().dump() == b.to_json().dump());
  auto other = small_config();
  other["ensemble"]["seed"] = 11;
  const auto c = run_stochastic(parse_config(other));
  CHECK(c.to_csv() != a.to_csv());
  CHECK(c.metadata["config_hash"] != a.metadata["config_hash"]);
  CHECK(c.metadata["model_hash"] == a.metadata["model_hash"]);
}

TEST_CASE("rows are ordered by observable and time") {
  const auto t = run_exact(parse_config(small_config()));
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& p = t.rows[i - 1];
    const auto& q = t.rows[i];
    CHECK((p.observable_id < q.observable_id || (p.observable_id == q.observable_id && p.t < q.t)));
  }
}

TEST_CASE("csv and json round trip") {
  const auto t = run_stochastic(parse_config(small_config()));
  const auto from_csv = ResultTable::from_csv(t.to_csv());
  const auto from_json = ResultTable::from_json(t.to_json());
  REQUIRE(from_csv.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(from_csv.rows[i].re == t.rows[i].re);
    CHECK(from_csv.rows[i].stderr_im == t.rows[i].stderr_im);
    CHECK(from_json.rows[i].im == t.rows[i].im);
    CHECK(from_json.rows[i].n_traj == t.rows[i].n_traj);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-0.0) == "0");
}

TEST_CASE("compare semantics") {
  ResultTable a;
  a.metadata["model_hash"] = "x";
  a.rows = {{"P", 0.0, 0.5, 0.0, 0.1, 0.1, 10, 0}, {"P", 1.0, 0.4, 0.0, 0.1, 0.1, 10, 0}};
  const auto same = compare_tables(a, a);
  CHECK(same.pass);
  CHECK(same.max_z == 0.0);

  ResultTable e = a;
  e.rows[1].re = 0.75;
  const auto off = compare_tables(a, e);
  CHECK(off.max_z == doctest::Approx(3.5));
  CHECK_FALSE(off.pass);
  CHECK(compare_tables(a, e, 4.0).pass);

  ResultTable missing = a;
  missing.rows.pop_back();
  try {
    compare_tables(a, missing);
    FAIL("expected an unmatched-row error");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("P@1 (stochastic only)") != std::string::npos);
  }

  ResultTable other = a;
  other.metadata["model_hash"] = "y";
  CHECK_THROWS_AS(compare_tables(a, other), ValidationError);
  CHECK(compare_tables(a, other, 3.0, true).pass);
}

TEST_CASE("selftest suites pass") {
  for (const auto& c : algebra_selftest(200, 3)) CHECK_MESSAGE(c.pass, c.name << ": " << c.detail);
  const auto cfg = parse_config(small_config());
  for (const auto& c : noise_selftest(build_coefficients(cfg), 5000, 1e-3, 3)) CHECK_MESSAGE(c.pass, c.name << ": " << c.detail);
}

TEST_CASE("command line: exit codes and outputs") {
  const fs::path dir = scratch("run");
  const fs::path config = dir / "config.json";
  write_json(config, small_config());

  CHECK(run_cli("run " + config.string() + " --out-dir " + (dir / "a").string()) == 0);
  CHECK(run_cli("run " + config.string() + " --out-dir " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "two_site.csv") == slurp(dir / "b" / "two_site.csv"));
  CHECK(slurp(dir / "a" / "two_site.json") == slurp(dir / "b" / "two_site.json"));

  CHECK(run_cli("run " + config.string() + " --seed 99 --format csv --plot --out-dir " + (dir / "c").string()) == 0);
  CHECK(fs::exists(dir / "c" / "two_site.csv"));
  CHECK_FALSE(fs::exists(dir / "c" / "two_site.json"));
  CHECK(fs::exists(dir / "c" / "two_site.svg"));
  CHECK(slurp(dir / "c" / "two_site.csv") != slurp(dir / "a" / "two_site.csv"));

  CHECK(run_cli("exact " + config.string() + " --out-dir " + (dir / "a").string()) == 0);
  const std::string report = (dir / "report.json").string();
  const int verdict = run_cli("compare " + (dir / "a" / "two_site.json").string() + " " +
                              (dir / "a" / "two_site_exact.json").string() + " --threshold 1000 --report " + report);
  CHECK(verdict == 0);
  CHECK(json::parse(slurp(report))["pass"] == true);
  CHECK(run_cli("compare " + (dir / "a" / "two_site.json").string() + " " + (dir / "a" / "two_site_exact.json").string() +
                " --threshold 0") == 3);
  // CSV tables carry no hashes, so comparing them needs --force.
  CHECK(run_cli("compare " + (dir / "c" / "two_site.csv").string() + " " +
                (dir / "a" / "two_site_exact.csv").string() + " --threshold 1000") == 1);
  CHECK(run_cli("compare " + (dir / "c" / "two_site.csv").string() + " " +
                (dir / "a" / "two_site_exact.csv").string() + " --threshold 1000 --force") == 0);

  json bad = small_config();
  bad["ensemble"]["trajectories"] = 0;
  write_json(dir / "bad.json", bad);
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 1);

  json divergent = small_config();
  divergent["model"]["coupling"] = 1e300;
  divergent["scheme"]["kind"] = "euler";
  divergent["scheme"]["dt"] = 1.0;
  write_json(dir / "divergent.json", divergent);
  CHECK(run_cli("run " + (dir / "divergent.json").string() + " --out-dir " + (dir / "d").string()) == 2);
  CHECK(json::parse(slurp(dir / "d" / "two_site.json"))["metadata"]["partial"] == true);

  CHECK(run_cli("selftest --samples 2000 --cases 100") == 0);
  fs::remove_all(dir.parent_path());
}
