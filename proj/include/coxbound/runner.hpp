#pragma once

#include <string>

#include "coxbound/config.hpp"

namespace coxbound {

struct RunOutcome {
  int exit_code = 0;
  std::string output;  // serialized report (JSON or CSV)
};

// Execute a parsed configuration and serialize its report.  Does not write
// files; the CLI decides where the output goes.
RunOutcome run_command(const RunConfig& cfg);

// individual commands (exposed for tests)
std::string cmd_bound(const RunConfig& cfg);
std::string cmd_sweep(const RunConfig& cfg);
std::string cmd_table1(const RunConfig& cfg);
RunOutcome cmd_validate(const RunConfig& cfg);

}  // namespace coxbound
