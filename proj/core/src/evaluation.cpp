#include "regnet/evaluation.hpp"

#include <cinttypes>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "regnet/error.hpp"
#include "regnet/parallel.hpp"
#include "regnet/rng.hpp"

namespace regnet {
namespace {

std::uint64_t hash_indices(std::uint64_t h, std::span<const std::size_t> indices) {
  for (std::size_t i : indices) {
    const auto v = static_cast<std::uint64_t>(i);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
  }
  return h;
}

}  // namespace

std::string hex_fingerprint(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

EpisodeScorer encoder_scorer(const EncoderParams& params, HeadKind head, const Hyper& hyper) {
  return [&params, head, hyper](const Episode& episode) {
    Tape tape;
    BoundEncoder encoder(params, tape);
    EmbeddedEpisode embedded{embed(encoder, episode.support), embed(encoder, episode.queries),
                             episode.query_labels, episode.n_way, episode.k_shot};
    return run_head(head, embedded, hyper).logits.value();
  };
}

AccuracySummary summarize(std::span<const double> values) {
  if (values.size() < 2) {
    throw ContractError("confidence interval undefined for fewer than two episodes");
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

double query_accuracy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.cols() != labels.size()) {
    throw ShapeError("query_accuracy: " + std::to_string(logits.cols()) + " columns, " +
                     std::to_string(labels.size()) + " labels");
  }
  const auto predicted = predict(logits);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) correct += predicted[j] == labels[j];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

EvalReport evaluate(const EpisodeScorer& scorer, const Dataset& test,
                    const EvalOptions& options) {
  if (options.episodes < 2) {
    throw ContractError("evaluate: confidence interval undefined for E = " +
                        std::to_string(options.episodes) + " (need E >= 2)");
  }
  const std::size_t count = options.episodes;
  std::vector<double> accuracy(count);
  std::vector<std::uint64_t> episode_hash(count);
  parallel_for(count, options.threads, [&](std::size_t i) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
    const Episode ep = sample_episode(test, options.n_way, options.k_shot, options.q_query, rng);
    accuracy[i] = 100.0 * query_accuracy(scorer(ep), ep.query_labels);
    std::uint64_t h = hash_indices(fnv1a(test.name()), ep.support_indices);
    episode_hash[i] = hash_indices(h, ep.query_indices);
  });

  EvalReport report;
  report.head = options.head;
  report.train_domain = options.train_domain;
  report.test_domain = test.name();
  report.n_way = options.n_way;
  report.k_shot = options.k_shot;
  report.q_query = options.q_query;
  report.episodes = count;
  const AccuracySummary s = summarize(accuracy);
  report.mean_accuracy = s.mean;
  report.ci95 = s.ci95;
  report.per_episode = std::move(accuracy);

  std::uint64_t eh = 0xcbf29ce484222325ULL;
  for (std::uint64_t h : episode_hash) {
    eh = fnv1a(std::string_view(reinterpret_cast<const char*>(&h), sizeof h), eh);
  }
  report.episodes_fingerprint = hex_fingerprint(eh);

  std::ostringstream cfg;
  cfg << "head=" << options.head << ";n=" << options.n_way << ";k=" << options.k_shot
      << ";q=" << options.q_query << ";E=" << options.episodes << ";eval_seed=" << options.seed
      << ";train=" << options.train_domain << ";test=" << test.name() << ";"
      << options.config_tag;
  report.config_fingerprint = hex_fingerprint(fnv1a(cfg.str()));
  return report;
}

EvalReport evaluate(const EncoderParams& params, HeadKind head, const Hyper& hyper,
                    const Dataset& test, EvalOptions options) {
  options.head = std::string(head_name(head));
  return evaluate(encoder_scorer(params, head, hyper), test, options);
}

void assert_disjoint_classes(const Dataset& a, const Dataset& b) {
  const auto ca = a.classes();
  const std::set<int> sa(ca.begin(), ca.end());
  for (int c : b.classes()) {
    if (sa.count(c)) {
      throw ContractError("class " + std::to_string(c) + " appears in both '" + a.name() +
                          "' (" + split_name(a.split()) + ") and '" + b.name() + "' (" +
                          split_name(b.split()) + ")");
    }
  }
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["head"] = head;
  j["train_domain"] = train_domain;
  j["test_domain"] = test_domain;
  j["n_way"] = n_way;
  j["k_shot"] = k_shot;
  j["q_query"] = q_query;
  j["episodes"] = episodes;
  j["mean_accuracy"] = mean_accuracy;
  j["ci95"] = ci95;
  j["config_fingerprint"] = config_fingerprint;
  j["episodes_fingerprint"] = episodes_fingerprint;
  j["per_episode"] = per_episode;
  return j.dump();
}

std::string format_table(std::span<const EvalReport> reports) {
  std::size_t train_w = 6, test_w = 6;
  for (const auto& r : reports) {
    train_w = std::max(train_w, r.train_domain.size() + 2);
    test_w = std::max(test_w, r.test_domain.size() + 2);
  }
  std::ostringstream os;
  os << std::left << std::setw(12) << "head" << std::setw(static_cast<int>(train_w)) << "train"
     << std::setw(static_cast<int>(test_w)) << "test" << std::setw(7) << "N-way" << std::setw(8)
     << "K-shot" << std::setw(6) << "E" << "accuracy (%)\n";
  for (const auto& r : reports) {
    std::ostringstream acc;
    acc << std::fixed << std::setprecision(2) << r.mean_accuracy << " +- " << r.ci95;
    os << std::left << std::setw(12) << r.head << std::setw(static_cast<int>(train_w))
       << r.train_domain << std::setw(static_cast<int>(test_w)) << r.test_domain << std::setw(7)
       << r.n_way << std::setw(8) << r.k_shot << std::setw(6) << r.episodes << acc.str() << '\n';
  }
  return os.str();
}

}  // namespace regnet
