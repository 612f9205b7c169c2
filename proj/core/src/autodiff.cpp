#include "regnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regnet/error.hpp"

namespace regnet {
namespace {

void expect_arity(OpKind op, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ShapeError(std::string(op_name(op)) + ": expected " + std::to_string(want) +
                     " inputs, got " + std::to_string(got));
  }
}

[[noreturn]] void shape_fail(OpKind op, const std::string& detail) {
  throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

Tensor col_norms_of(const Tensor& a) {
  Tensor out(1, a.cols());
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) acc += a(r, c) * a(r, c);
    out(0, c) = std::sqrt(acc);
  }
  return out;
}

Tensor logsumexp_cols(const Tensor& a) {
  Tensor out(1, a.cols());
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double mx = a(0, c);
    for (std::size_t r = 1; r < a.rows(); ++r) mx = std::max(mx, a(r, c));
    double acc = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) acc += std::exp(a(r, c) - mx);
    out(0, c) = mx + std::log(acc);
  }
  return out;
}

}  // namespace

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kScale: return "scale";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kRelu: return "relu";
    case OpKind::kL2Norm: return "l2_norm";
    case OpKind::kColNorms: return "col_norms";
    case OpKind::kFrobeniusSq: return "frobenius_norm_sq";
    case OpKind::kSolveSpd: return "solve_spd";
    case OpKind::kLogSumExp: return "logsumexp";
    case OpKind::kDivScalar: return "div_scalar";
    case OpKind::kAddColumn: return "add_column";
    case OpKind::kColSlice: return "col_slice";
    case OpKind::kHStack: return "hstack";
    case OpKind::kVStack: return "vstack";
    case OpKind::kPickPerColumn: return "pick_per_column";
    case OpKind::kSum: return "sum";
    case OpKind::kNormalizeCols: return "normalize_cols";
    case OpKind::kOpaque: return "opaque";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owner(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

Var Tape::variable(Tensor value) {
  return push(Node{OpKind::kLeaf, {}, std::move(value), true, {}, {}});
}

Var Tape::constant(Tensor value) {
  return push(Node{OpKind::kConstant, {}, std::move(value), false, {}, {}});
}

Var Tape::record_opaque(Tensor value, std::span<const Var> inputs) {
  Node node{OpKind::kOpaque, {}, std::move(value), false, {}, {}};
  for (const auto& v : inputs) {
    check_owner(v);
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  return push(std::move(node));
}

Var Tape::record(OpKind op, std::span<const Var> inputs, OpAttrs attrs) {
  Node node{op, {}, {}, false, std::move(attrs), {}};
  for (const auto& v : inputs) {
    check_owner(v);
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
  const std::size_t n_in = inputs.size();

  switch (op) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
    case OpKind::kOpaque:
      throw ContractError(std::string(op_name(op)) +
                          " nodes are created through variable/constant/record_opaque");
    case OpKind::kAdd:
      expect_arity(op, n_in, 2);
      node.value = in(0) + in(1);
      break;
    case OpKind::kSub:
      expect_arity(op, n_in, 2);
      node.value = in(0) - in(1);
      break;
    case OpKind::kScale:
      expect_arity(op, n_in, 1);
      node.value = in(0) * node.attrs.scalar;
      break;
    case OpKind::kMatmul:
      expect_arity(op, n_in, 2);
      node.value = regnet::matmul(in(0), in(1));
      break;
    case OpKind::kTranspose:
      expect_arity(op, n_in, 1);
      node.value = regnet::transpose(in(0));
      break;
    case OpKind::kTanh:
      expect_arity(op, n_in, 1);
      node.value = in(0);
      for (auto& x : node.value.data()) x = std::tanh(x);
      break;
    case OpKind::kExp:
      expect_arity(op, n_in, 1);
      node.value = in(0);
      for (auto& x : node.value.data()) x = std::exp(x);
      break;
    case OpKind::kRelu:
      expect_arity(op, n_in, 1);
      node.value = in(0);
      for (auto& x : node.value.data()) x = x > 0.0 ? x : 0.0;
      break;
    case OpKind::kL2Norm:
      expect_arity(op, n_in, 1);
      node.value = Tensor::scalar(regnet::l2_norm(in(0)));
      break;
    case OpKind::kColNorms:
      expect_arity(op, n_in, 1);
      node.value = col_norms_of(in(0));
      break;
    case OpKind::kFrobeniusSq:
      expect_arity(op, n_in, 1);
      node.value = Tensor::scalar(regnet::frobenius_norm_sq(in(0)));
      break;
    case OpKind::kSolveSpd: {
      expect_arity(op, n_in, 2);
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.rows() != a.cols() || b.rows() != a.rows()) {
        shape_fail(op, "cannot solve " + a.shape_str() + " against " + b.shape_str());
      }
      node.aux = cholesky(a);
      node.value = cholesky_solve(node.aux, b);
      break;
    }
    case OpKind::kLogSumExp:
      expect_arity(op, n_in, 1);
      if (in(0).rows() == 0) shape_fail(op, "empty input");
      node.value = logsumexp_cols(in(0));
      break;
    case OpKind::kDivScalar:
      expect_arity(op, n_in, 2);
      if (!in(1).is_scalar()) shape_fail(op, "divisor must be 1x1, got " + in(1).shape_str());
      node.value = in(0) * (1.0 / in(1).item());
      break;
    case OpKind::kAddColumn: {
      expect_arity(op, n_in, 2);
      const Tensor& a = in(0);
      const Tensor& c = in(1);
      if (!c.is_vector() || c.rows() != a.rows()) {
        shape_fail(op, "cannot broadcast " + c.shape_str() + " over " + a.shape_str());
      }
      node.value = a;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t j = 0; j < a.cols(); ++j) node.value(r, j) += c[r];
      }
      break;
    }
    case OpKind::kColSlice:
      expect_arity(op, n_in, 1);
      node.value = in(0).cols_range(node.attrs.begin, node.attrs.count);
      break;
    case OpKind::kHStack:
    case OpKind::kVStack: {
      if (n_in == 0) shape_fail(op, "no blocks");
      std::vector<Tensor> blocks;
      blocks.reserve(n_in);
      for (std::size_t i = 0; i < n_in; ++i) blocks.push_back(in(i));
      node.value = op == OpKind::kHStack ? regnet::hstack(blocks) : regnet::vstack(blocks);
      break;
    }
    case OpKind::kPickPerColumn: {
      expect_arity(op, n_in, 1);
      const Tensor& a = in(0);
      if (node.attrs.picks.size() != a.cols()) {
        shape_fail(op, std::to_string(node.attrs.picks.size()) + " picks for " +
                           std::to_string(a.cols()) + " columns");
      }
      node.value = Tensor(1, a.cols());
      for (std::size_t j = 0; j < a.cols(); ++j) {
        if (node.attrs.picks[j] >= a.rows()) {
          throw ContractError("pick_per_column: row " + std::to_string(node.attrs.picks[j]) +
                              " out of range for " + a.shape_str());
        }
        node.value(0, j) = a(node.attrs.picks[j], j);
      }
      break;
    }
    case OpKind::kSum:
      expect_arity(op, n_in, 1);
      node.value = Tensor::scalar(regnet::sum(in(0)));
      break;
    case OpKind::kNormalizeCols: {
      expect_arity(op, n_in, 1);
      const Tensor norms = col_norms_of(in(0));
      node.value = in(0);
      for (std::size_t c = 0; c < node.value.cols(); ++c) {
        const double inv = norms(0, c) > 0.0 ? 1.0 / norms(0, c) : 0.0;
        for (std::size_t r = 0; r < node.value.rows(); ++r) node.value(r, c) *= inv;
      }
      break;
    }
  }
  return push(std::move(node));
}

const Tensor& Tape::grad(std::size_t id) const {
  if (id >= grads_.size()) {
    throw ContractError("grad requested before backward for node " + std::to_string(id));
  }
  return grads_[id];
}

const Gradients& Tape::backward(const Var& loss) {
  check_owner(loss);
  if (!nodes_[loss.id()].value.is_scalar()) {
    throw ContractError("backward: loss must be 1x1, got " +
                        nodes_[loss.id()].value.shape_str());
  }
  std::vector<Tensor> g(nodes_.size());
  std::vector<bool> reached(nodes_.size(), false);
  g[loss.id()] = Tensor::scalar(1.0);
  reached[loss.id()] = true;

  auto accumulate = [&](std::size_t id, Tensor contribution) {
    if (!nodes_[id].requires_grad) return;
    if (reached[id]) {
      g[id] += contribution;
    } else {
      g[id] = std::move(contribution);
      reached[id] = true;
    }
  };

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    if (!reached[id] || !nodes_[id].requires_grad) continue;
    const Node& node = nodes_[id];
    const Tensor& gy = g[id];
    auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
    auto needs = [&](std::size_t i) { return nodes_[node.inputs[i]].requires_grad; };

    switch (node.op) {
      case OpKind::kLeaf:
      case OpKind::kConstant:
        break;
      case OpKind::kOpaque:
        throw UnsupportedOpError("backward: node " + std::to_string(id) +
                                 " has no adjoint rule (opaque op on the loss path)");
      case OpKind::kAdd:
        accumulate(node.inputs[0], gy);
        accumulate(node.inputs[1], gy);
        break;
      case OpKind::kSub:
        accumulate(node.inputs[0], gy);
        accumulate(node.inputs[1], gy * -1.0);
        break;
      case OpKind::kScale:
        accumulate(node.inputs[0], gy * node.attrs.scalar);
        break;
      case OpKind::kMatmul:
        if (needs(0)) accumulate(node.inputs[0], matmul_nt(gy, in(1)));
        if (needs(1)) accumulate(node.inputs[1], matmul_tn(in(0), gy));
        break;
      case OpKind::kTranspose:
        accumulate(node.inputs[0], regnet::transpose(gy));
        break;
      case OpKind::kTanh: {
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const double y = node.value[i];
          gx[i] *= 1.0 - y * y;
        }
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kExp:
        accumulate(node.inputs[0], hadamard(gy, node.value));
        break;
      case OpKind::kRelu: {
        Tensor gx = gy;
        const Tensor& x = in(0);
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (!(x[i] > 0.0)) gx[i] = 0.0;
        }
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kL2Norm: {
        const double norm = node.value.item();
        Tensor gx(in(0).rows(), in(0).cols());
        if (norm > 0.0) gx = in(0) * (gy.item() / norm);
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kColNorms: {
        const Tensor& x = in(0);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double norm = node.value(0, c);
          if (!(norm > 0.0)) continue;
          const double s = gy(0, c) / norm;
          for (std::size_t r = 0; r < x.rows(); ++r) gx(r, c) = s * x(r, c);
        }
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kFrobeniusSq:
        accumulate(node.inputs[0], in(0) * (2.0 * gy.item()));
        break;
      case OpKind::kSolveSpd: {
        // X = A^{-1} B:  B_bar = A^{-T} G,  A_bar = -B_bar X^T.  A is symmetric,
        // so the stored factor also solves against A^T.
        Tensor gb = cholesky_solve(node.aux, gy);
        if (needs(0)) accumulate(node.inputs[0], matmul_nt(gb, node.value) * -1.0);
        if (needs(1)) accumulate(node.inputs[1], std::move(gb));
        break;
      }
      case OpKind::kLogSumExp: {
        const Tensor& x = in(0);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double lse = node.value(0, c);
          for (std::size_t r = 0; r < x.rows(); ++r) {
            gx(r, c) = gy(0, c) * std::exp(x(r, c) - lse);
          }
        }
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kDivScalar: {
        const double s = in(1).item();
        if (needs(0)) accumulate(node.inputs[0], gy * (1.0 / s));
        if (needs(1)) accumulate(node.inputs[1], Tensor::scalar(-dot(gy, node.value) / s));
        break;
      }
      case OpKind::kAddColumn: {
        if (needs(0)) accumulate(node.inputs[0], gy);
        if (needs(1)) {
          Tensor gc(gy.rows(), 1);
          for (std::size_t r = 0; r < gy.rows(); ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < gy.cols(); ++c) acc += gy(r, c);
            gc[r] = acc;
          }
          accumulate(node.inputs[1], std::move(gc));
        }
        break;
      }
      case OpKind::kColSlice: {
        const Tensor& x = in(0);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < node.attrs.count; ++c) gx(r, node.attrs.begin + c) = gy(r, c);
        }
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kHStack: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          const std::size_t w = in(i).cols();
          if (needs(i)) accumulate(node.inputs[i], gy.cols_range(offset, w));
          offset += w;
        }
        break;
      }
      case OpKind::kVStack: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          const Tensor& x = in(i);
          if (needs(i)) {
            Tensor gx(x.rows(), x.cols());
            for (std::size_t r = 0; r < x.rows(); ++r) {
              for (std::size_t c = 0; c < x.cols(); ++c) gx(r, c) = gy(offset + r, c);
            }
            accumulate(node.inputs[i], std::move(gx));
          }
          offset += x.rows();
        }
        break;
      }
      case OpKind::kPickPerColumn: {
        const Tensor& x = in(0);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t c = 0; c < x.cols(); ++c) gx(node.attrs.picks[c], c) = gy(0, c);
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
      case OpKind::kSum: {
        const Tensor& x = in(0);
        accumulate(node.inputs[0], Tensor(x.rows(), x.cols(), gy.item()));
        break;
      }
      case OpKind::kNormalizeCols: {
        const Tensor& x = in(0);
        const Tensor& y = node.value;
        Tensor gx(x.rows(), x.cols());
        for (std::size_t c = 0; c < x.cols(); ++c) {
          double norm_sq = 0.0;
          double proj = 0.0;
          for (std::size_t r = 0; r < x.rows(); ++r) {
            norm_sq += x(r, c) * x(r, c);
            proj += y(r, c) * gy(r, c);
          }
          if (!(norm_sq > 0.0)) continue;
          const double inv = 1.0 / std::sqrt(norm_sq);
          for (std::size_t r = 0; r < x.rows(); ++r) {
            gx(r, c) = (gy(r, c) - y(r, c) * proj) * inv;
          }
        }
        accumulate(node.inputs[0], std::move(gx));
        break;
      }
    }
  }

  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!reached[id] || !nodes_[id].requires_grad) {
      g[id] = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
  }
  grads_ = Gradients(std::move(g));
  return grads_;
}

namespace {

Var record1(OpKind op, const Var& a, OpAttrs attrs = {}) {
  const Var inputs[] = {a};
  return a.tape()->record(op, inputs, std::move(attrs));
}

Var record2(OpKind op, const Var& a, const Var& b) {
  const Var inputs[] = {a, b};
  return a.tape()->record(op, inputs);
}

}  // namespace

Var add(const Var& a, const Var& b) { return record2(OpKind::kAdd, a, b); }
Var sub(const Var& a, const Var& b) { return record2(OpKind::kSub, a, b); }
Var scale(const Var& a, double s) {
  OpAttrs attrs;
  attrs.scalar = s;
  return record1(OpKind::kScale, a, std::move(attrs));
}
Var matmul(const Var& a, const Var& b) { return record2(OpKind::kMatmul, a, b); }
Var transpose(const Var& a) { return record1(OpKind::kTranspose, a); }
Var tanh(const Var& a) { return record1(OpKind::kTanh, a); }
Var relu(const Var& a) { return record1(OpKind::kRelu, a); }
Var exp(const Var& a) { return record1(OpKind::kExp, a); }
Var l2_norm(const Var& v) { return record1(OpKind::kL2Norm, v); }
Var col_norms(const Var& a) { return record1(OpKind::kColNorms, a); }
Var frobenius_norm_sq(const Var& a) { return record1(OpKind::kFrobeniusSq, a); }
Var solve_spd(const Var& a, const Var& b) { return record2(OpKind::kSolveSpd, a, b); }
Var logsumexp(const Var& v) { return record1(OpKind::kLogSumExp, v); }
Var div(const Var& a, const Var& s) { return record2(OpKind::kDivScalar, a, s); }
Var add_column(const Var& a, const Var& c) { return record2(OpKind::kAddColumn, a, c); }

Var col_slice(const Var& a, std::size_t begin, std::size_t count) {
  OpAttrs attrs;
  attrs.begin = begin;
  attrs.count = count;
  return record1(OpKind::kColSlice, a, std::move(attrs));
}

Var hstack(std::span<const Var> blocks) {
  if (blocks.empty()) throw ShapeError("hstack: no blocks");
  return blocks.front().tape()->record(OpKind::kHStack, blocks);
}

Var vstack(std::span<const Var> blocks) {
  if (blocks.empty()) throw ShapeError("vstack: no blocks");
  return blocks.front().tape()->record(OpKind::kVStack, blocks);
}

Var pick_per_column(const Var& a, std::vector<std::size_t> rows) {
  OpAttrs attrs;
  attrs.picks = std::move(rows);
  return record1(OpKind::kPickPerColumn, a, std::move(attrs));
}

Var sum(const Var& a) { return record1(OpKind::kSum, a); }
Var normalize_cols(const Var& a) { return record1(OpKind::kNormalizeCols, a); }

}  // namespace regnet
