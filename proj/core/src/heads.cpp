#include "regnet/heads.hpp"

#include <string>

#include "regnet/error.hpp"

namespace regnet {
namespace {

Var broadcast_scalar(Tape& tape, const Var& s, std::size_t rows, std::size_t cols) {
  // ones(rows x 1) * s * ones(1 x cols)
  Var col = matmul(tape.constant(Tensor(rows, 1, 1.0)), s);
  if (cols == 1) return col;
  return matmul(col, tape.constant(Tensor(1, cols, 1.0)));
}

void check_labels(const EmbeddedEpisode& episode) {
  if (episode.query_labels.size() != episode.queries.cols()) {
    throw ContractError("episode has " + std::to_string(episode.queries.cols()) + " queries but " +
                        std::to_string(episode.query_labels.size()) + " labels");
  }
  for (std::size_t j = 0; j < episode.query_labels.size(); ++j) {
    if (episode.query_labels[j] >= episode.n_way) {
      throw ContractError("query " + std::to_string(j) + " has label " +
                          std::to_string(episode.query_labels[j]) + " outside [0, " +
                          std::to_string(episode.n_way) + ")");
    }
  }
  if (episode.support.cols() != episode.n_way * episode.k_shot) {
    throw ShapeError("support has " + std::to_string(episode.support.cols()) +
                     " columns, expected N*K = " +
                     std::to_string(episode.n_way * episode.k_shot));
  }
}

Var class_support(const EmbeddedEpisode& episode, std::size_t n) {
  return col_slice(episode.support, n * episode.k_shot, episode.k_shot);
}

// Mean over queries of lse(logits) - logits[label].
Var cross_entropy(const Var& logits, const std::vector<std::size_t>& labels) {
  const double inv_b = 1.0 / static_cast<double>(labels.size());
  Var per_query = sub(logsumexp(logits), pick_per_column(logits, labels));
  return scale(sum(per_query), inv_b);
}

}  // namespace

void Hyper::validate() const {
  if (!(lambda1 >= 0.0)) throw ConfigError("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be >= 0");
  if (n_way < 2) throw ConfigError("n_way must be >= 2");
  if (k_shot < 1) throw ConfigError("k_shot must be >= 1");
  if (q_query < 1) throw ConfigError("q_query must be >= 1");
}

ClassSubspace build_subspace(const Var& support, double lambda1, std::size_t class_id) {
  const std::size_t m = support.rows();
  const std::size_t k = support.cols();
  if (k == 0) throw ShapeError("build_subspace: empty support");
  if (m < k) {
    throw ContractError("build_subspace: embedding dimension " + std::to_string(m) +
                        " is smaller than the shot count " + std::to_string(k));
  }
  if (!(lambda1 >= 0.0)) throw ContractError("build_subspace: lambda1 must be >= 0");
  Tape& tape = *support.tape();
  Var st = transpose(support);
  Var gram = matmul(st, support);
  if (lambda1 > 0.0) gram = add(gram, tape.constant(Tensor::identity(k) * lambda1));
  // (S^T S + lambda1 I)^{-1} S^T, then left-multiply by S.
  Var coeffs = solve_spd(gram, st);
  return ClassSubspace{class_id, support, matmul(support, coeffs)};
}

Var regression_distance(const Var& e, const ClassSubspace& sub) {
  if (!e.value().is_vector() || e.rows() != sub.projector.rows()) {
    throw ShapeError("regression_distance: point " + e.value().shape_str() +
                     " does not match projector " + sub.projector.value().shape_str());
  }
  return l2_norm(regnet::sub(e, matmul(sub.projector, e)));
}

Var regression_distances(const Var& points, const ClassSubspace& sub) {
  if (points.rows() != sub.projector.rows()) {
    throw ShapeError("regression_distances: points " + points.value().shape_str() +
                     " do not match projector " + sub.projector.value().shape_str());
  }
  return col_norms(regnet::sub(points, matmul(sub.projector, points)));
}

Var posterior(const Var& query, std::span<const ClassSubspace> subs) {
  if (subs.size() < 2) throw ContractError("posterior: need at least two classes");
  std::vector<Var> neg;
  neg.reserve(subs.size());
  for (const auto& s : subs) neg.push_back(scale(regression_distance(query, s), -1.0));
  Var logits = vstack(neg);
  Var lse = logsumexp(logits);
  Tape& tape = *query.tape();
  return exp(sub(logits, broadcast_scalar(tape, lse, subs.size(), 1)));
}

Var ortho_penalty(std::span<const ClassSubspace> subs) {
  if (subs.size() < 2) throw ContractError("ortho_penalty: need at least two subspaces");
  std::vector<Var> norms;
  norms.reserve(subs.size());
  for (const auto& s : subs) {
    Var f = frobenius_norm_sq(s.support);
    if (!(f.value().item() > 0.0)) {
      throw DegenerateSubspaceError("ortho_penalty: support matrix of class " +
                                    std::to_string(s.class_id) + " is zero");
    }
    norms.push_back(f);
  }
  std::vector<Var> terms;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    Var sit = transpose(subs[i].support);
    for (std::size_t j = 0; j < subs.size(); ++j) {
      if (i == j) continue;
      Var cross = frobenius_norm_sq(matmul(sit, subs[j].support));
      terms.push_back(div(div(cross, norms[i]), norms[j]));
    }
  }
  return sum(vstack(terms));
}

Var proto_distance(const Var& e, const Var& class_support) {
  if (!e.value().is_vector() || e.rows() != class_support.rows()) {
    throw ShapeError("proto_distance: point " + e.value().shape_str() + " vs support " +
                     class_support.value().shape_str());
  }
  Tape& tape = *e.tape();
  const std::size_t k = class_support.cols();
  Var mean = matmul(class_support, tape.constant(Tensor(k, 1, 1.0 / static_cast<double>(k))));
  return l2_norm(sub(e, mean));
}

Var cosine_score(const Var& e, const Var& class_support) {
  if (!e.value().is_vector() || e.rows() != class_support.rows()) {
    throw ShapeError("cosine_score: point " + e.value().shape_str() + " vs support " +
                     class_support.value().shape_str());
  }
  Tape& tape = *e.tape();
  const std::size_t k = class_support.cols();
  Var sims = matmul(transpose(normalize_cols(class_support)), normalize_cols(e));  // K x 1
  return matmul(tape.constant(Tensor(1, k, 1.0 / static_cast<double>(k))), sims);
}

std::string_view head_name(HeadKind head) {
  switch (head) {
    case HeadKind::kRegression: return "regression";
    case HeadKind::kProto: return "proto";
    case HeadKind::kCosine: return "cosine";
  }
  return "regression";
}

HeadKind parse_head(std::string_view name) {
  if (name == "regression") return HeadKind::kRegression;
  if (name == "proto") return HeadKind::kProto;
  if (name == "cosine") return HeadKind::kCosine;
  throw ConfigError("unknown head '" + std::string(name) + "'");
}

std::vector<ClassSubspace> build_subspaces(const EmbeddedEpisode& episode, double lambda1) {
  std::vector<ClassSubspace> subs;
  subs.reserve(episode.n_way);
  for (std::size_t n = 0; n < episode.n_way; ++n) {
    subs.push_back(build_subspace(class_support(episode, n), lambda1, n));
  }
  return subs;
}

HeadOutput regression_head(const EmbeddedEpisode& episode,
                           std::span<const ClassSubspace> subs, const Hyper& hyper) {
  check_labels(episode);
  if (subs.size() != episode.n_way) {
    throw ContractError("regression_head: " + std::to_string(subs.size()) +
                        " subspaces for an " + std::to_string(episode.n_way) + "-way episode");
  }
  std::vector<Var> rows;
  rows.reserve(subs.size());
  for (const auto& s : subs) rows.push_back(regression_distances(episode.queries, s));
  Var logits = scale(vstack(rows), -1.0);
  Var loss = cross_entropy(logits, episode.query_labels);
  if (hyper.lambda2 > 0.0) loss = add(loss, scale(ortho_penalty(subs), hyper.lambda2));
  return {logits, loss};
}

HeadOutput run_head(HeadKind head, const EmbeddedEpisode& episode, const Hyper& hyper) {
  check_labels(episode);
  Tape& tape = *episode.queries.tape();
  switch (head) {
    case HeadKind::kRegression: {
      const auto subs = build_subspaces(episode, hyper.lambda1);
      return regression_head(episode, subs, hyper);
    }
    case HeadKind::kProto: {
      const std::size_t k = episode.k_shot;
      Var avg = tape.constant(Tensor(k, 1, 1.0 / static_cast<double>(k)));
      std::vector<Var> rows;
      for (std::size_t n = 0; n < episode.n_way; ++n) {
        Var mean = matmul(class_support(episode, n), avg);
        rows.push_back(col_norms(add_column(episode.queries, scale(mean, -1.0))));
      }
      Var logits = scale(vstack(rows), -1.0);
      return {logits, cross_entropy(logits, episode.query_labels)};
    }
    case HeadKind::kCosine: {
      const std::size_t k = episode.k_shot;
      Var avg = tape.constant(Tensor(1, k, 1.0 / static_cast<double>(k)));
      Var q_hat = normalize_cols(episode.queries);
      std::vector<Var> rows;
      for (std::size_t n = 0; n < episode.n_way; ++n) {
        Var s_hat = normalize_cols(class_support(episode, n));
        rows.push_back(matmul(avg, matmul(transpose(s_hat), q_hat)));
      }
      Var logits = vstack(rows);
      return {logits, cross_entropy(logits, episode.query_labels)};
    }
  }
  throw ContractError("run_head: unknown head");
}

Var episode_loss(const EmbeddedEpisode& episode, std::span<const ClassSubspace> subs,
                 const Hyper& hyper) {
  return regression_head(episode, subs, hyper).loss;
}

std::vector<std::size_t> predict(const Tensor& logits) {
  std::vector<std::size_t> out(logits.cols(), 0);
  for (std::size_t c = 0; c < logits.cols(); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < logits.rows(); ++r) {
      if (logits(r, c) > logits(best, c)) best = r;
    }
    out[c] = best;
  }
  return out;
}

}  // namespace regnet
