#pragma once

// Command dispatch and report emission for the berwald-lab CLI.

#include "blab/config.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace blab {

enum ExitCode : int {
  exit_ok = 0,
  exit_verdict_mismatch = 1,
  exit_config_error = 2,
  exit_numerical_failure = 3,
};

const std::vector<std::string>& command_names();

struct CommandResult {
  int exit_code = exit_ok;
  nlohmann::json report;  // {command, config_echo, verdicts, residuals, warnings, error, exit_code, timings}
  std::map<std::string, std::string> csv;  // file name -> contents
};

/// Runs one command in memory. Never throws for module errors; they end up
/// in `report["error"]` with the matching exit code.
CommandResult run_command(const std::string& command, const RunConfig& config);

/// Writes report.json and the CSV tables into `out_dir` (created if needed).
void write_outputs(const CommandResult& result, const std::string& out_dir, bool csv);

/// Report without the timings block, serialised the way it is written.
std::string deterministic_dump(const nlohmann::json& report);

}  // namespace blab
