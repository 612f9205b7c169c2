#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace regnet {

// Self-verification run by `regnet check`: closed-form distances against an
// iterative least-squares minimizer, projector laws, posterior contracts and
// finite-difference gradient checks of the full training loss.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::size_t trials = 0;
  double worst = 0.0;  // largest observed error for the check's metric
  double tolerance = 0.0;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  std::size_t distance_trials = 200;
  std::size_t law_trials = 100;
  std::size_t gradient_trials = 20;
};

std::vector<CheckResult> run_checks(const CheckOptions& options);

}  // namespace regnet
