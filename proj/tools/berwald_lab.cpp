#include "blab/commands.hpp"
#include "blab/config.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"berwald-lab: numerical checks for Berwald metrics and geodesic equivalence"};
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool quiet = false;

  app.add_option("command", command, "Command to run")
      ->required()
      ->check(CLI::IsMember(blab::command_names()));
  app.add_option("--config", config_path, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out_dir, "Directory for report.json and CSV tables");
  app.add_flag("--quiet", quiet, "Suppress the summary on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : blab::exit_config_error;
  }

  blab::RunConfig config;
  if (config_path.empty()) {
    if (command != "selftest") {
      std::cerr << "error: --config is required for '" << command << "'\n";
      return blab::exit_config_error;
    }
    config.metric = blab::builtin_catalog().front();
  } else {
    try {
      config = blab::load_config(config_path);
    } catch (const blab::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return blab::exit_config_error;
    }
  }
  if (*seed_opt) config.seed = seed;

  const blab::CommandResult result = blab::run_command(command, config);
  try {
    blab::write_outputs(result, out_dir, config.options.csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return blab::exit_config_error;
  }

  if (!quiet) {
    for (const auto& v : result.report["verdicts"]) {
      std::cout << (v["match"].get<bool>() ? "ok   " : "FAIL ") << v["name"].get<std::string>()
                << ": expected " << v["expected"].dump() << ", observed " << v["observed"].dump() << "\n";
    }
    for (const auto& w : result.report["warnings"]) std::cout << "warning: " << w.get<std::string>() << "\n";
    if (!result.report["error"].is_null()) {
      std::cout << "error (" << result.report["error"]["kind"].get<std::string>()
                << "): " << result.report["error"]["message"].get<std::string>() << "\n";
    }
    std::cout << "exit " << result.exit_code << ", report in " << out_dir << "/report.json\n";
  }
  return result.exit_code;
}
