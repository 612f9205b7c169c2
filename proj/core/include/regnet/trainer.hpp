#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regnet/encoder.hpp"
#include "regnet/episodes.hpp"
#include "regnet/heads.hpp"

namespace regnet {

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_query = 16;
  std::size_t batch_tasks = 1;  // episodes per parameter update
  std::size_t episodes = 2000;
  double learning_rate = 1e-3;
  double lambda1 = 1e-3;
  // Unset means 1e-3 for one-shot and 1e-2 otherwise.
  std::optional<double> lambda2;
  std::size_t val_interval = 500;
  std::size_t val_episodes = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  HeadKind head = HeadKind::kRegression;
  Optimizer optimizer = Optimizer::kAdam;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t embed_dim = 16;
  Activation activation = Activation::kRelu;
  bool log_wall_time = false;

  double effective_lambda2() const;
  Hyper hyper() const;
  std::vector<LayerSpec> layer_spec(std::size_t input_dim) const;
  // Throws ConfigError on out-of-range fields.
  void validate() const;
  // Canonical key=value rendering of every field, used for fingerprints.
  std::string canonical() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  EncoderParams first_moment;
  EncoderParams second_moment;

  static AdamState zeros_like(const EncoderParams& params);
};

// Bias-corrected Adam step in place.
void adam_update(EncoderParams& params, const EncoderParams& grads, AdamState& state,
                 double learning_rate);
// Plain gradient descent: params -= learning_rate * grads.
void sgd_update(EncoderParams& params, const EncoderParams& grads, double learning_rate);

struct EpisodeGradient {
  double loss = 0.0;
  double accuracy = 0.0;  // fraction of queries classified correctly
  EncoderParams grads;
};

// Forward and backward pass of one episode's loss through the encoder.
EpisodeGradient episode_gradient(const EncoderParams& params, const Episode& episode,
                                 HeadKind head, const Hyper& hyper);

struct StepMetrics {
  double loss = 0.0;      // sum over the batch of per-episode losses
  double accuracy = 0.0;  // mean query accuracy over the batch
};

// One update on the summed loss of `batch`. Throws DivergenceError (with the
// batch-local episode index) when a loss or gradient is not finite.
StepMetrics train_step(EncoderParams& params, std::span<const Episode> batch,
                       const TrainConfig& config, AdamState& adam);

struct HistoryRecord {
  std::size_t episode = 0;  // episodes consumed so far
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> wall_seconds;

  std::string to_json() const;
};

struct FitResult {
  EncoderParams best;
  std::size_t best_episode = 0;
  double best_val_accuracy = 0.0;
  std::vector<HistoryRecord> history;
};

// Initial parameters for a run, drawn from the config's "init" seed stream.
EncoderParams initial_params(const TrainConfig& config, std::size_t input_dim);

// Episodic training with validation-based model selection. Validation runs
// every val_interval episodes and after the last step; the checkpoint with the
// highest validation accuracy wins, ties going to the earliest. When `log` is
// given, each history record is written to it as one JSON line.
FitResult fit(const Dataset& train, const Dataset& val, const TrainConfig& config,
              std::ostream* log = nullptr);
FitResult fit(const Dataset& train, const Dataset& val, const TrainConfig& config,
              EncoderParams init, std::ostream* log = nullptr);

}  // namespace regnet
