#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "regnet/tensor.hpp"

namespace regnet {

// Operation recorded on a tape. Every kind except kOpaque has an adjoint rule.
enum class OpKind {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kScale,
  kMatmul,
  kTranspose,
  kTanh,
  kExp,
  kRelu,
  kL2Norm,
  kColNorms,
  kFrobeniusSq,
  kSolveSpd,
  kLogSumExp,
  kDivScalar,
  kAddColumn,
  kColSlice,
  kHStack,
  kVStack,
  kPickPerColumn,
  kSum,
  kNormalizeCols,
  kOpaque,
};

std::string_view op_name(OpKind op);

// Non-tensor arguments of an operation.
struct OpAttrs {
  double scalar = 0.0;
  std::size_t begin = 0;
  std::size_t count = 0;
  std::vector<std::size_t> picks;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  const Tensor& value() const;
  // Gradient from the most recent backward pass; zeros if unreached.
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Adjoints indexed by node id.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<Tensor> grads) : grads_(std::move(grads)) {}

  const Tensor& operator[](std::size_t id) const { return grads_.at(id); }
  const Tensor& operator[](const Var& v) const { return grads_.at(v.id()); }
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  std::vector<Tensor> grads_;
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// inputs always precede their consumers and a reverse sweep is a valid
// topological order. One tape is single-threaded; build one per episode.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf.
  Var variable(Tensor value);
  // Leaf excluded from differentiation; its gradient is always zero.
  Var constant(Tensor value);

  // Computes the forward value of `op` and stores the node.
  Var record(OpKind op, std::span<const Var> inputs, OpAttrs attrs = {});

  // Stores a caller-computed value with no adjoint rule. backward() throws
  // UnsupportedOpError if the loss depends on it through a differentiable path.
  Var record_opaque(Tensor value, std::span<const Var> inputs);

  // Reverse sweep from a 1x1 loss. Resets all previous adjoints first.
  const Gradients& backward(const Var& loss);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  OpKind kind(std::size_t id) const { return nodes_.at(id).op; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    OpKind op;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool requires_grad = false;
    OpAttrs attrs;
    Tensor aux;  // kSolveSpd: Cholesky factor of A.
  };

  Var push(Node node);
  void check_owner(const Var& v) const;

  std::vector<Node> nodes_;
  Gradients grads_;
};

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
// Euclidean norm of a column vector. Gradient at the origin is zero.
Var l2_norm(const Var& v);
// 1xB row of per-column Euclidean norms.
Var col_norms(const Var& a);
Var frobenius_norm_sq(const Var& a);
// X with A X = B, A symmetric positive definite.
Var solve_spd(const Var& a, const Var& b);
// Column-wise log-sum-exp with max subtraction; an n x 1 input yields a scalar.
Var logsumexp(const Var& v);
// a / s for a 1x1 variable s.
Var div(const Var& a, const Var& s);
// Adds column vector `c` to every column of `a`.
Var add_column(const Var& a, const Var& c);
Var col_slice(const Var& a, std::size_t begin, std::size_t count);
Var hstack(std::span<const Var> blocks);
Var vstack(std::span<const Var> blocks);
// 1xB row whose j-th entry is a(rows[j], j).
Var pick_per_column(const Var& a, std::vector<std::size_t> rows);
Var sum(const Var& a);
// Each column divided by its norm; zero columns stay zero.
Var normalize_cols(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace regnet
