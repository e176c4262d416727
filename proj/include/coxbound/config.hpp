#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "coxbound/designs.hpp"
#include "coxbound/solver.hpp"

namespace coxbound {

struct ValidateOptions {
  long long n = 1000000;       // observations for the moment/orthogonality checks
  double tolerance_scale = 1.0;  // multiplies every stochastic pass band
  bool sp_enabled = false;
  int sp_cohort = 5000;
  int sp_replications = 2000;
  std::vector<double> sp_p0{0.01, 0.1};
  std::vector<double> sp_theta{0.0, std::log(2.0)};
  double sp_pi0 = 0.1;
};

// Parsed and validated run configuration; exactly one model block.
struct RunConfig {
  int schema_version = 1;
  std::string command;  // bound | sweep | table1 | validate

  std::optional<CaseCohortSpec> case_cohort;
  Phase1Scope case_cohort_phase1 = Phase1Scope::YDeltaV;
  std::optional<StratifiedSpec> stratified;
  std::optional<BuiltDesign> raw_model;

  GridOptions grid;
  SolveOptions solver;
  std::string route = "T";  // T | K | both
  std::uint64_t seed = 20260810;
  int threads = 2;
  std::string out_path;

  std::optional<CaseCohortSweep> case_cohort_sweep;
  std::optional<StratifiedSweep> stratified_sweep;
  ComparisonTableOptions table1;
  ValidateOptions validate;

  BuiltDesign build() const;  // materialize the configured model/design/variant
};

RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

}  // namespace coxbound
