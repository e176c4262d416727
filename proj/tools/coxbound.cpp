#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "coxbound/report.hpp"
#include "coxbound/runner.hpp"

// exit codes: 0 success, 1 validation-suite failure, 2 configuration error,
// 3 numeric failure
int main(int argc, char** argv) {
  CLI::App app{"semiparametric information bounds for Cox models under two-phase sampling"};
  std::string config_path;
  std::string out_path;
  std::string route;
  int grid_n = -1;
  long long seed = -1;
  int threads = -1;

  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_path, "output path (overrides the config)");
  app.add_option("--grid-n", grid_n, "initial interval-cell count (overrides the config)");
  app.add_option("--seed", seed, "root seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads (overrides the config)");
  app.add_option("--route", route, "solve route: T, K, or both (overrides the config)")
      ->check(CLI::IsMember({"T", "K", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    coxbound::RunConfig cfg = coxbound::parse_config_file(config_path);
    if (!out_path.empty()) cfg.out_path = out_path;
    if (grid_n > 0) {
      cfg.grid.initial_intervals = grid_n;
      if (cfg.grid.max_intervals < grid_n) cfg.grid.max_intervals = grid_n;
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) cfg.threads = threads;
    if (!route.empty()) cfg.route = route;

    const coxbound::RunOutcome outcome = coxbound::run_command(cfg);
    if (cfg.out_path.empty())
      std::cout << outcome.output;
    else
      coxbound::write_file(cfg.out_path, outcome.output);
    return outcome.exit_code;
  } catch (const coxbound::ValidationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const coxbound::StructuralError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const coxbound::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
