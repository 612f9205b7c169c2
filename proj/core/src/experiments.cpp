#include "regnet/experiments.hpp"

#include "regnet/error.hpp"

namespace regnet {
namespace {

EvalOptions eval_options(const ExperimentConfig& config, const Dataset& train) {
  EvalOptions o;
  o.n_way = config.train.n_way;
  o.k_shot = config.train.k_shot;
  o.q_query = config.train.q_query;
  o.episodes = config.test_episodes;
  o.seed = config.eval_seed;
  o.threads = config.train.threads;
  o.head = std::string(head_name(config.train.head));
  o.train_domain = train.name();
  o.config_tag = config.train.canonical();
  return o;
}

}  // namespace

EvalReport train_and_evaluate(const Dataset& train, const Dataset& val, const Dataset& test,
                              const ExperimentConfig& config, std::ostream* log) {
  if (train.name() == test.name()) assert_disjoint_classes(train, test);
  const FitResult fitted = fit(train, val, config.train, log);
  return evaluate(fitted.best, config.train.head, config.train.hyper(), test,
                  eval_options(config, train));
}

AblationResult ablate_lambda2(const Dataset& train, const Dataset& val, const Dataset& test,
                              const ExperimentConfig& config, std::span<const double> lambda2) {
  if (lambda2.empty()) throw ConfigError("ablate_lambda2: no lambda2 values");
  AblationResult result;
  for (double l2 : lambda2) {
    ExperimentConfig run = config;
    run.train.lambda2 = l2;
    result.lambda2.push_back(l2);
    result.reports.push_back(train_and_evaluate(train, val, test, run));
  }
  const auto& base = result.reports.front();
  for (const auto& r : result.reports) {
    if (r.episodes_fingerprint != base.episodes_fingerprint) {
      throw ContractError("ablate_lambda2: runs were evaluated on different test episodes");
    }
    std::vector<double> delta(r.per_episode.size());
    double mean = 0.0;
    for (std::size_t e = 0; e < delta.size(); ++e) {
      delta[e] = r.per_episode[e] - base.per_episode[e];
      mean += delta[e];
    }
    result.mean_delta.push_back(mean / static_cast<double>(delta.size()));
    result.paired_delta.push_back(std::move(delta));
  }
  return result;
}

EvalReport domain_shift(const Dataset& a, const Dataset& b, const ExperimentConfig& config) {
  if (a.feature_dim() != b.feature_dim()) {
    throw ShapeError("domain_shift: feature dimension " + std::to_string(a.feature_dim()) +
                     " of '" + a.name() + "' differs from " + std::to_string(b.feature_dim()) +
                     " of '" + b.name() + "'");
  }
  const ClassSplit sa = split_classes(a, config.fractions, config.split_seed);
  const ClassSplit sb = split_classes(b, config.fractions, config.split_seed);
  return train_and_evaluate(sa.train, sa.val, sb.test, config);
}

std::vector<EvalReport> compare_heads(const Dataset& train, const Dataset& val,
                                      const Dataset& test, const ExperimentConfig& config,
                                      std::span<const HeadKind> heads) {
  std::vector<EvalReport> reports;
  for (HeadKind head : heads) {
    ExperimentConfig run = config;
    run.train.head = head;
    reports.push_back(train_and_evaluate(train, val, test, run));
  }
  return reports;
}

}  // namespace regnet
