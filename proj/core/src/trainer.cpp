#include "regnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "regnet/error.hpp"
#include "regnet/evaluation.hpp"
#include "regnet/parallel.hpp"
#include "regnet/rng.hpp"

namespace regnet {
namespace {

bool all_finite(const EncoderParams& p) {
  for (const Tensor* t : p.tensors()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

void add_into(EncoderParams& acc, const EncoderParams& g) {
  auto dst = acc.tensors();
  auto src = g.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
}

}  // namespace

double TrainConfig::effective_lambda2() const {
  if (lambda2) return *lambda2;
  return k_shot == 1 ? 1e-3 : 1e-2;
}

Hyper TrainConfig::hyper() const {
  Hyper h;
  h.lambda1 = lambda1;
  h.lambda2 = effective_lambda2();
  h.n_way = n_way;
  h.k_shot = k_shot;
  h.q_query = q_query;
  return h;
}

std::vector<LayerSpec> TrainConfig::layer_spec(std::size_t input_dim) const {
  return mlp_spec(input_dim, hidden, embed_dim, activation);
}

void TrainConfig::validate() const {
  hyper().validate();
  if (batch_tasks < 1) throw ConfigError("batch_tasks must be >= 1");
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (val_interval < 1) throw ConfigError("val_interval must be >= 1");
  if (val_episodes < 2) throw ConfigError("val_episodes must be >= 2");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (embed_dim < k_shot) {
    throw ConfigError("embedding dimension " + std::to_string(embed_dim) +
                      " must be at least the shot count " + std::to_string(k_shot));
  }
}

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << n_way << ";k=" << k_shot << ";q=" << q_query << ";batch=" << batch_tasks
     << ";episodes=" << episodes << ";lr=" << learning_rate << ";lambda1=" << lambda1
     << ";lambda2=" << effective_lambda2() << ";val_interval=" << val_interval
     << ";val_episodes=" << val_episodes << ";seed=" << seed << ";head=" << head_name(head)
     << ";optimizer=" << (optimizer == Optimizer::kAdam ? "adam" : "sgd") << ";hidden=";
  for (std::size_t i = 0; i < hidden.size(); ++i) os << (i ? "," : "") << hidden[i];
  os << ";embed_dim=" << embed_dim << ";activation=" << activation_name(activation);
  return os.str();
}

AdamState AdamState::zeros_like(const EncoderParams& params) {
  AdamState s;
  s.first_moment = params;
  for (Tensor* t : s.first_moment.tensors()) *t *= 0.0;
  s.second_moment = s.first_moment;
  return s;
}

void adam_update(EncoderParams& params, const EncoderParams& grads, AdamState& state,
                 double learning_rate) {
  if (state.first_moment.layers.size() != params.layers.size()) {
    const AdamState fresh = AdamState::zeros_like(params);
    state.first_moment = fresh.first_moment;
    state.second_moment = fresh.second_moment;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i]->same_shape(*g[i])) {
      throw ShapeError("adam_update: gradient " + g[i]->shape_str() + " for parameter " +
                       p[i]->shape_str());
    }
    for (std::size_t j = 0; j < p[i]->size(); ++j) {
      const double gj = (*g[i])[j];
      double& mj = (*m[i])[j];
      double& vj = (*v[i])[j];
      mj = state.beta1 * mj + (1.0 - state.beta1) * gj;
      vj = state.beta2 * vj + (1.0 - state.beta2) * gj * gj;
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      (*p[i])[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void sgd_update(EncoderParams& params, const EncoderParams& grads, double learning_rate) {
  auto p = params.tensors();
  auto g = grads.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i]->same_shape(*g[i])) {
      throw ShapeError("sgd_update: gradient " + g[i]->shape_str() + " for parameter " +
                       p[i]->shape_str());
    }
    for (std::size_t j = 0; j < p[i]->size(); ++j) (*p[i])[j] -= learning_rate * (*g[i])[j];
  }
}

EpisodeGradient episode_gradient(const EncoderParams& params, const Episode& episode,
                                 HeadKind head, const Hyper& hyper) {
  Tape tape;
  BoundEncoder encoder(params, tape);
  EmbeddedEpisode embedded{embed(encoder, episode.support), embed(encoder, episode.queries),
                           episode.query_labels, episode.n_way, episode.k_shot};
  const HeadOutput out = run_head(head, embedded, hyper);
  EpisodeGradient result;
  result.loss = out.loss.value().item();
  result.accuracy = query_accuracy(out.logits.value(), episode.query_labels);
  if (std::isfinite(result.loss)) {
    tape.backward(out.loss);
    result.grads = encoder.gradients();
  }
  return result;
}

StepMetrics train_step(EncoderParams& params, std::span<const Episode> batch,
                       const TrainConfig& config, AdamState& adam) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Episode& ep = batch[i];
    if (ep.n_way != config.n_way || ep.k_shot != config.k_shot || ep.q_query != config.q_query) {
      throw ContractError("train_step: episode " + std::to_string(i) + " is " +
                          std::to_string(ep.n_way) + "-way " + std::to_string(ep.k_shot) +
                          "-shot, config expects " + std::to_string(config.n_way) + "-way " +
                          std::to_string(config.k_shot) + "-shot");
    }
  }
  const Hyper hyper = config.hyper();
  std::vector<EpisodeGradient> results(batch.size());
  parallel_for(batch.size(), config.threads, [&](std::size_t i) {
    results[i] = episode_gradient(params, batch[i], config.head, hyper);
  });

  StepMetrics metrics;
  EncoderParams total;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!std::isfinite(r.loss) || !all_finite(r.grads)) {
      throw DivergenceError("non-finite loss or gradient in episode " + std::to_string(i), i);
    }
    metrics.loss += r.loss;
    metrics.accuracy += r.accuracy;
    if (i == 0) {
      total = r.grads;
    } else {
      add_into(total, r.grads);
    }
  }
  metrics.accuracy /= static_cast<double>(results.size());

  if (config.optimizer == Optimizer::kAdam) {
    adam_update(params, total, adam, config.learning_rate);
  } else {
    sgd_update(params, total, config.learning_rate);
  }
  return metrics;
}

std::string HistoryRecord::to_json() const {
  nlohmann::ordered_json j;
  j["episode"] = episode;
  j["train_loss"] = train_loss;
  j["train_accuracy"] = train_accuracy;
  if (val_accuracy) j["val_accuracy"] = *val_accuracy;
  if (wall_seconds) j["wall_seconds"] = *wall_seconds;
  return j.dump();
}

EncoderParams initial_params(const TrainConfig& config, std::size_t input_dim) {
  return init_encoder(derive_seed(config.seed, "init"), config.layer_spec(input_dim));
}

FitResult fit(const Dataset& train, const Dataset& val, const TrainConfig& config,
              std::ostream* log) {
  config.validate();
  return fit(train, val, config, initial_params(config, train.feature_dim()), log);
}

FitResult fit(const Dataset& train, const Dataset& val, const TrainConfig& config,
              EncoderParams init, std::ostream* log) {
  config.validate();
  if (init.input_dim() != train.feature_dim()) {
    throw ShapeError("fit: encoder expects dimension " + std::to_string(init.input_dim()) +
                     ", training set has " + std::to_string(train.feature_dim()));
  }
  if (val.size() > 0 && val.feature_dim() != train.feature_dim()) {
    throw ShapeError("fit: validation dimension differs from training dimension");
  }
  const Hyper hyper = config.hyper();
  const std::uint64_t sampling_seed = derive_seed(config.seed, "sampling");

  EvalOptions val_opts;
  val_opts.n_way = config.n_way;
  val_opts.k_shot = config.k_shot;
  val_opts.q_query = config.q_query;
  val_opts.episodes = config.val_episodes;
  val_opts.seed = derive_seed(config.seed, "validation");
  val_opts.threads = config.threads;
  val_opts.head = std::string(head_name(config.head));

  EncoderParams params = std::move(init);
  AdamState adam = AdamState::zeros_like(params);
  FitResult result;
  bool have_best = false;
  const auto start = std::chrono::steady_clock::now();

  std::size_t consumed = 0;
  std::size_t next_validation = config.val_interval;
  while (consumed < config.episodes) {
    const std::size_t batch_size = std::min(config.batch_tasks, config.episodes - consumed);
    std::vector<Episode> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      Rng rng(derive_seed(sampling_seed, static_cast<std::uint64_t>(consumed + i)));
      batch.push_back(sample_episode(train, config.n_way, config.k_shot, config.q_query, rng));
    }
    StepMetrics metrics;
    try {
      metrics = train_step(params, batch, config, adam);
    } catch (const DivergenceError& e) {
      const std::size_t index = consumed + e.episode();
      throw DivergenceError("training diverged at episode " + std::to_string(index), index);
    }
    consumed += batch_size;

    HistoryRecord record;
    record.episode = consumed;
    record.train_loss = metrics.loss;
    record.train_accuracy = metrics.accuracy;
    const bool last = consumed == config.episodes;
    if (consumed >= next_validation || last) {
      while (next_validation <= consumed) next_validation += config.val_interval;
      const EvalReport report = evaluate(params, config.head, hyper, val, val_opts);
      record.val_accuracy = report.mean_accuracy;
      if (!have_best || report.mean_accuracy > result.best_val_accuracy) {
        have_best = true;
        result.best = params;
        result.best_episode = consumed;
        result.best_val_accuracy = report.mean_accuracy;
      }
    }
    if (config.log_wall_time) {
      record.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    if (log) *log << record.to_json() << '\n';
    result.history.push_back(std::move(record));
  }
  return result;
}

}  // namespace regnet
