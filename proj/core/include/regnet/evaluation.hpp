#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "regnet/encoder.hpp"
#include "regnet/episodes.hpp"
#include "regnet/heads.hpp"

namespace regnet {

// Scores the queries of an episode: returns N x (N*Q) logits whose column-wise
// argmax (ties to the lowest index) is the prediction.
using EpisodeScorer = std::function<Tensor(const Episode&)>;

EpisodeScorer encoder_scorer(const EncoderParams& params, HeadKind head, const Hyper& hyper);

struct EvalOptions {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_query = 16;
  std::size_t episodes = 600;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string head = "regression";
  std::string train_domain;
  // Extra configuration mixed into the fingerprint (training hyperparameters).
  std::string config_tag;
};

struct EvalReport {
  std::string head;
  std::string train_domain;
  std::string test_domain;
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_query = 0;
  std::size_t episodes = 0;
  double mean_accuracy = 0.0;  // percent
  double ci95 = 0.0;           // percent, half-width
  std::vector<double> per_episode;  // percent
  std::string config_fingerprint;
  // Hash of the sampled test episodes; equal values mean identical episodes.
  std::string episodes_fingerprint;

  std::string to_json() const;
};

struct AccuracySummary {
  double mean = 0.0;
  double ci95 = 0.0;
};

// Mean and 1.96 * s / sqrt(E) with s the sample standard deviation.
// Throws ContractError when fewer than two values are given.
AccuracySummary summarize(std::span<const double> values);

double query_accuracy(const Tensor& logits, std::span<const std::size_t> labels);

// Samples `episodes` test episodes (episode i from derive_seed(seed, i)) and
// scores each.
EvalReport evaluate(const EpisodeScorer& scorer, const Dataset& test, const EvalOptions& options);

EvalReport evaluate(const EncoderParams& params, HeadKind head, const Hyper& hyper,
                    const Dataset& test, EvalOptions options);

// Throws ContractError if the two datasets share a class id.
void assert_disjoint_classes(const Dataset& a, const Dataset& b);

std::string format_table(std::span<const EvalReport> reports);

std::string hex_fingerprint(std::uint64_t h);

}  // namespace regnet
