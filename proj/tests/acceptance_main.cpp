#include "blab/acceptance.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  blab::AcceptanceOptions options;
  if (argc > 1) options.seed = std::strtoull(argv[1], nullptr, 10);
  options.on_result = [](const blab::CriterionResult& c) {
    std::cout << (c.passed ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << c.seconds
              << " s): " << c.detail << std::endl;
  };
  const blab::AcceptanceSummary summary = blab::run_acceptance(options);
  std::cout << (summary.all_passed ? "all criteria passed" : "some criteria failed") << " in "
            << summary.seconds << " s" << std::endl;
  return summary.all_passed ? 0 : 1;
}
