#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "regnet/autodiff.hpp"

namespace regnet {

// Episode shape and loss weights for the regression head.
struct Hyper {
  double lambda1 = 1e-3;  // ridge conditioning of S^T S
  double lambda2 = 0.0;   // weight of the pairwise orthogonalization penalty
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_query = 16;

  void validate() const;
};

// Embedded support matrix S (M x K) of one class and its projector
// P = S (S^T S + lambda1 I)^{-1} S^T, both on the tape.
struct ClassSubspace {
  std::size_t class_id = 0;
  Var support;
  Var projector;
};

// Requires M >= K. With lambda1 == 0 and rank-deficient S the Cholesky step
// raises ConditioningError.
ClassSubspace build_subspace(const Var& support, double lambda1, std::size_t class_id = 0);

// ||e - P e||_2 for a single embedded point (M x 1).
Var regression_distance(const Var& e, const ClassSubspace& sub);
// 1 x B distances for every column of `points` (M x B).
Var regression_distances(const Var& points, const ClassSubspace& sub);

// softmax(-d) over classes for one query; N x 1.
Var posterior(const Var& query, std::span<const ClassSubspace> subs);

// Sum over ordered pairs i != j of ||S_i^T S_j||_F^2 / (||S_i||_F^2 ||S_j||_F^2).
// Throws DegenerateSubspaceError on an all-zero support matrix.
Var ortho_penalty(std::span<const ClassSubspace> subs);

// Euclidean distance to the support mean.
Var proto_distance(const Var& e, const Var& class_support);
// Mean cosine similarity between e and the support columns, in [-1, 1].
Var cosine_score(const Var& e, const Var& class_support);

enum class HeadKind { kRegression, kProto, kCosine };

std::string_view head_name(HeadKind head);
HeadKind parse_head(std::string_view name);

// Embedded episode. Support columns are class-major: columns
// [n*K, (n+1)*K) belong to class n. Query labels are in [0, N).
struct EmbeddedEpisode {
  Var support;  // M x (N*K)
  Var queries;  // M x B
  std::vector<std::size_t> query_labels;
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
};

std::vector<ClassSubspace> build_subspaces(const EmbeddedEpisode& episode, double lambda1);

struct HeadOutput {
  Var logits;  // N x B; posterior is softmax over each column
  Var loss;    // 1 x 1; mean cross-entropy over queries plus any penalty
};

// Regression-network loss: mean over queries of d(e, S_true) + log sum exp(-d),
// plus lambda2 * ortho_penalty(subs).
HeadOutput regression_head(const EmbeddedEpisode& episode,
                           std::span<const ClassSubspace> subs, const Hyper& hyper);

HeadOutput run_head(HeadKind head, const EmbeddedEpisode& episode, const Hyper& hyper);

// Convenience wrapper: the loss of run_head for the regression head.
Var episode_loss(const EmbeddedEpisode& episode, std::span<const ClassSubspace> subs,
                 const Hyper& hyper);

// Argmax per column, ties to the lowest class index.
std::vector<std::size_t> predict(const Tensor& logits);

}  // namespace regnet
