#include "blab/commands.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace blab;

namespace {

RunConfig config_for(const std::string& text) { return parse_config(text); }

const nlohmann::json* verdict(const nlohmann::json& report, const std::string& name) {
  for (const auto& v : report["verdicts"])
    if (v["name"] == name) return &v;
  return nullptr;
}

}  // namespace

TEST_CASE("average on the plane gives 4 I") {
  const CommandResult r = run_command("average", config_for(R"({"metric": {"kind": "euclidean", "dim": 2}})"));
  CHECK(r.exit_code == exit_ok);
  CHECK(r.report["command"] == "average");
  REQUIRE(r.csv.count("averaged_metric.csv") == 1);
  const auto* v = verdict(r.report, "affine_equivalence");
  REQUIRE(v != nullptr);
  CHECK((*v)["match"] == true);
  std::istringstream csv(r.csv.at("averaged_metric.csv"));
  std::string header, row;
  std::getline(csv, header);
  REQUIRE(std::getline(csv, row));
  CHECK(header.find("g00") != std::string::npos);
}

TEST_CASE("report has the documented top-level keys") {
  const CommandResult r = run_command("mobility", config_for(R"({"metric": {"kind": "euclidean", "dim": 2}})"));
  for (const char* key : {"command", "config_echo", "verdicts", "residuals", "timings"})
    CHECK(r.report.contains(key));
  CHECK(r.exit_code == exit_ok);
  const auto* v = verdict(r.report, "degree_of_mobility");
  REQUIRE(v != nullptr);
  CHECK((*v)["observed"] == 6);
  CHECK(parse_config(r.report["config_echo"].dump()) == config_for(R"({"metric": {"kind": "euclidean", "dim": 2}})"));
}

TEST_CASE("hilbert4 on a Minkowski norm") {
  const CommandResult r = run_command("hilbert4", config_for(R"({"metric": {"kind": "lp_smooth", "dim": 2}})"));
  CHECK(r.exit_code == exit_ok);
  const auto* v = verdict(r.report, "projective_flatness");
  REQUIRE(v != nullptr);
  CHECK((*v)["observed"] == "Minkowski");
}

TEST_CASE("wrong expectation is a verdict mismatch") {
  const CommandResult r = run_command(
      "mobility", config_for(R"({"metric": {"kind": "euclidean", "dim": 2}, "options": {"expected_mobility": 3}})"));
  CHECK(r.exit_code == exit_verdict_mismatch);
  CHECK(r.report["exit_code"] == exit_verdict_mismatch);
}

TEST_CASE("check-berwald flags the Randers control") {
  const CommandResult r = run_command(
      "check-berwald",
      config_for(R"({"metric": {"kind": "randers_control", "dim": 2}, "options": {"trials": 10}})"));
  CHECK(r.exit_code == exit_ok);
  const auto* v = verdict(r.report, "berwald");
  REQUIRE(v != nullptr);
  CHECK((*v)["expected"] == false);
  CHECK((*v)["observed"] == false);
}

TEST_CASE("numerical failure maps to exit code 3") {
  // An integrator with a step count of zero cannot run.
  RunConfig c = config_for(R"({"metric": {"kind": "euclidean", "dim": 2}})");
  c.integrator.steps_per_unit = 0;
  const CommandResult r = run_command("holonomy", c);
  CHECK(r.exit_code == exit_numerical_failure);
  CHECK(r.report["error"]["kind"] == "integration failure");
}

TEST_CASE("unknown command is a config error") {
  const CommandResult r = run_command("bogus", config_for(R"({"metric": {"kind": "euclidean", "dim": 2}})"));
  CHECK(r.exit_code == exit_config_error);
}

TEST_CASE("reports are deterministic apart from timings") {
  const RunConfig c = config_for(R"({"metric": {"kind": "conformal", "dim": 2}, "seed": 9, "options": {"trials": 5}})");
  for (const std::string cmd : {"check-berwald", "equivalence"}) {
    const CommandResult a = run_command(cmd, c);
    const CommandResult b = run_command(cmd, c);
    CAPTURE(cmd);
    CHECK(deterministic_dump(a.report) == deterministic_dump(b.report));
    CHECK(a.csv == b.csv);
    CHECK(deterministic_dump(a.report).find("timings") == std::string::npos);
  }
}

TEST_CASE("outputs are written to the requested directory") {
  const auto dir = std::filesystem::temp_directory_path() / "blab_test_outputs";
  std::filesystem::remove_all(dir);
  const CommandResult r = run_command("average", config_for(R"({"metric": {"kind": "euclidean", "dim": 2}})"));
  write_outputs(r, dir.string(), true);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "averaged_metric.csv"));
  std::ifstream in(dir / "report.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["command"] == "average");
  std::filesystem::remove_all(dir);
}
