#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regnet/episodes.hpp"
#include "regnet/evaluation.hpp"
#include "regnet/trainer.hpp"

namespace regnet {

struct ExperimentConfig {
  TrainConfig train;
  std::size_t test_episodes = 600;
  // Root of the test-episode stream; shared by every run of one experiment.
  std::uint64_t eval_seed = 0;
  // train / val / test class fractions for domain-shift splits.
  std::array<double, 3> fractions = {4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  std::uint64_t split_seed = 0;
};

// Trains with `config.train` and evaluates the selected checkpoint.
EvalReport train_and_evaluate(const Dataset& train, const Dataset& val, const Dataset& test,
                              const ExperimentConfig& config, std::ostream* log = nullptr);

struct AblationResult {
  std::vector<double> lambda2;
  std::vector<EvalReport> reports;
  // paired_delta[i][e] = reports[i].per_episode[e] - reports[0].per_episode[e]
  std::vector<std::vector<double>> paired_delta;
  std::vector<double> mean_delta;
};

// One model per lambda2 value, identical seeds otherwise, all evaluated on the
// same test episodes.
AblationResult ablate_lambda2(const Dataset& train, const Dataset& val, const Dataset& test,
                              const ExperimentConfig& config, std::span<const double> lambda2);

// Trains on A's train classes, selects on A's val classes and evaluates on B's
// test classes. Both datasets are split with config.fractions.
EvalReport domain_shift(const Dataset& a, const Dataset& b, const ExperimentConfig& config);

// One encoder per head, each trained with its own loss, evaluated on shared
// test episodes.
std::vector<EvalReport> compare_heads(const Dataset& train, const Dataset& val,
                                      const Dataset& test, const ExperimentConfig& config,
                                      std::span<const HeadKind> heads);

}  // namespace regnet
