#pragma once

// The acceptance suite shared by the acceptance binary and `berwald-lab selftest`.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace blab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 0;
  // Run every command on every built-in catalog entry as part of the last criterion.
  bool catalog_sweep = true;
  // Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

struct AcceptanceSummary {
  std::vector<CriterionResult> criteria;
  bool all_passed = false;
  double seconds = 0.0;
};

AcceptanceSummary run_acceptance(const AcceptanceOptions& options = {});

}  // namespace blab
