#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coxbound/report.hpp"
#include "coxbound/runner.hpp"
#include "test_support.hpp"

using namespace coxbound;

namespace {

std::string bound_config(const char* extra = "") {
  std::ostringstream ss;
  ss << R"({"schema_version":1,"command":"bound",
       "model":{"type":"case_cohort","p0":0.1,"theta":0.6931471805599453,"h1":0.5,"pi0":0.1},
       "grid":{"initial_nodes":80,"refine":false})"
     << extra << "}";
  return ss.str();
}

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(COXBOUND_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "cli_test_" + name;
  std::ofstream f(path, std::ios::binary);
  f << content;
  return path;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK_THROWS_AS(parse_config_text("not json"), ValidationError);
  CHECK_THROWS_AS(parse_config_text(R"({"command":"fly"})"), ValidationError);
  CHECK_THROWS_AS(parse_config_text(R"({"command":"bound"})"), ValidationError);
  CHECK_THROWS_AS(parse_config_text(
                      R"({"command":"bound","model":{"type":"case_cohort","pi0":1.5}})"),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_config_text(R"({"schema_version":2,"command":"bound","model":{"type":"case_cohort"}})"),
      ValidationError);

  const RunConfig cfg = parse_config_text(bound_config());
  CHECK(cfg.command == "bound");
  REQUIRE(cfg.case_cohort.has_value());
  CHECK(cfg.case_cohort->p0 == 0.1);
  CHECK(cfg.grid.initial_intervals == 80);
  CHECK_FALSE(cfg.grid.refine);
}

TEST_CASE("raw model block round-trips through the solver") {
  const std::string text = R"({
    "schema_version": 1, "command": "bound",
    "model": {
      "type": "raw", "tau": 1.0, "coefficient": "z", "theta": [0.25],
      "baseline": {"rates": [0.3]},
      "levels": [
        {"x": [0.0], "h": 0.55, "censoring": {"hazard": {"rates": [0.4]}, "remainder_at_tau": true}},
        {"x": [1.0], "h": 0.45, "censoring": {"hazard": {"rates": [0.6]}, "remainder_at_tau": true}}
      ],
      "design": {"phase1": "y_delta_v", "pi_censored": [[0.35]], "pi_failure": [[1.0]]}
    },
    "grid": {"initial_nodes": 64, "refine": false}
  })";
  const RunConfig cfg = parse_config_text(text);
  REQUIRE(cfg.raw_model.has_value());
  const std::string report = cmd_bound(cfg);
  CHECK(report.find("\"are_ib\"") != std::string::npos);
}

TEST_CASE("bound report matches direct library calls bit for bit") {
  const RunConfig cfg = parse_config_text(bound_config());
  const std::string report = cmd_bound(cfg);

  const BuiltDesign b = cfg.build();
  const BoundResult res = solve_bound(b.model, b.design, b.variant, cfg.grid);
  const std::string expect_istar = fmt17(res.solution.I_star(0, 0));
  const std::string expect_ifull = fmt17(res.I_full(0, 0));
  CHECK(report.find(expect_istar) != std::string::npos);
  CHECK(report.find(expect_ifull) != std::string::npos);
}

TEST_CASE("sweep command: csv shape, ratios, determinism") {
  const std::string text = R"({
    "schema_version": 1, "command": "sweep",
    "sweep": {"kind": "case_cohort", "p0": [0.1], "theta": [0.6931471805599453],
              "pi0": [0.2, 0.5, 1.0], "h1": 0.5, "with_sp": true},
    "grid": {"initial_nodes": 80, "refine": true, "max_nodes": 320},
    "threads": 2
  })";
  const RunConfig cfg = parse_config_text(text);
  const std::string csv1 = cmd_sweep(cfg);
  const std::string csv2 = cmd_sweep(cfg);
  CHECK(csv1 == csv2);

  std::istringstream lines(csv1);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "p0,theta,pi0,i_star,i_full,are_ib,sp_var,sp_ratio,residual,converged");
  int rows = 0;
  std::vector<double> ratios;
  while (std::getline(lines, line)) {
    ++rows;
    // sp_ratio is the 8th field
    std::istringstream fields(line);
    std::string cell;
    for (int i = 0; i < 8; ++i) std::getline(fields, cell, ',');
    ratios.push_back(std::stod(cell));
  }
  CHECK(rows == 3);
  for (double r : ratios) CHECK(r >= 1.0 - 1e-9);
}

TEST_CASE("table1 command: published constants and recomputed ratio") {
  const std::string text = R"({
    "schema_version": 1, "command": "table1",
    "table1": {"theta_set": [0.6931471805599453], "lambda": 0.01,
               "px1": [0.05], "levels": [0.5, 0.9]},
    "grid": {"initial_nodes": 100, "refine": false},
    "threads": 2
  })";
  const RunConfig cfg = parse_config_text(text);
  const std::string csv = cmd_table1(cfg);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "px1,sens,spec,theta,are_ib_pct,are_pl_pct,ratio_pct,converged");
  bool saw_ninety = false;
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    REQUIRE(f.size() == 8);
    if (f[1] == "0.90000000000000002" && f[2] == "0.90000000000000002") {
      saw_ninety = true;
      CHECK(f[5] == "60.5");  // published constant passthrough
      const double ratio = std::stod(f[6]);
      const double recomputed = 100.0 * 60.5 / std::stod(f[4]);
      CHECK(std::abs(ratio - recomputed) < 0.05);
    }
  }
  CHECK(saw_ninety);
}

TEST_CASE("validate command exit codes") {
  // a forced failure through a zero tolerance scale
  const std::string text = R"({
    "schema_version": 1, "command": "validate",
    "model": {"type": "case_cohort", "p0": 0.1, "theta": 0.6931471805599453, "h1": 0.5, "pi0": 0.1},
    "grid": {"initial_nodes": 60, "refine": false},
    "validate": {"n": 20000, "tolerance_scale": 0.0},
    "seed": 11
  })";
  const RunOutcome bad = cmd_validate(parse_config_text(text));
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("\"all_pass\":false") != std::string::npos);

  const std::string ok_text = R"({
    "schema_version": 1, "command": "validate",
    "model": {"type": "case_cohort", "p0": 0.1, "theta": 0.6931471805599453, "h1": 0.5, "pi0": 0.1},
    "grid": {"initial_nodes": 60, "refine": false},
    "validate": {"n": 20000},
    "seed": 11
  })";
  const RunOutcome ok = cmd_validate(parse_config_text(ok_text));
  CHECK(ok.exit_code == 0);
  // the report lists every registered check family
  for (const char* name :
       {"operators/residual_inverts_integral", "operators/decomposition", "solver/route_agreement",
        "mc/prob_failure", "mc/mean_kstar", "mc/var_kstar_matches_bound",
        "orthogonality/lambda_const", "ks_failure_cdf/level0"})
    CHECK(ok.output.find(name) != std::string::npos);
}

TEST_CASE("cli binary: exit codes and byte-identical reruns") {
  const std::string cfg = write_temp("sweep.json", R"({
    "schema_version": 1, "command": "sweep",
    "sweep": {"kind": "case_cohort", "p0": [0.1], "theta": [0.0], "pi0": [0.3, 1.0],
              "h1": 0.5, "with_sp": false},
    "grid": {"initial_nodes": 60, "refine": false},
    "threads": 2
  })");
  const CliResult a = run_cli("--config " + cfg);
  const CliResult b = run_cli("--config " + cfg);
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(a.output.find("p0,theta,pi0,") == 0);

  // malformed config: exit 2, no output file written
  const std::string bad = write_temp("bad.json", "{\"command\":\"bound\"}");
  const CliResult c = run_cli("--config " + bad + " --out cli_test_never.json");
  CHECK(c.exit_code == 2);
  std::ifstream never("cli_test_never.json");
  CHECK_FALSE(never.good());

  // missing config file: exit 2
  CHECK(run_cli("--config does_not_exist.json").exit_code == 2);

  // flag overrides reach the run
  const std::string boundcfg = write_temp("bound.json", bound_config());
  const CliResult d = run_cli("--config " + boundcfg + " --route both --grid-n 60");
  CHECK(d.exit_code == 0);
  CHECK(d.output.find("route_check") != std::string::npos);

  std::remove(cfg.c_str());
  std::remove(bad.c_str());
  std::remove(boundcfg.c_str());
}
