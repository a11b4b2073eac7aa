#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "denc/common.hpp"
#include "denc/tensor.hpp"

namespace denc {

// Primitive kinds recorded on the tape. Forward values are computed eagerly
// at apply(); backward() replays the tape in reverse.
enum class OpKind : std::uint8_t {
  kLeaf,
  kMatmul,        // (m x k) * (k x n)
  kMatmulNT,      // (m x k) * (n x k)^T
  kAdd,
  kSub,
  kMul,           // elementwise
  kTanh,
  kSigmoid,
  kRelu,
  kHinge,         // max(0, x)
  kRowSoftmax,
  kMeanRows,      // (n x c) -> (1 x c), fixed summation order
  kConcatCols,
  kStackRows,     // k inputs (1 x c) -> (k x c)
  kSliceRows,     // rows [r0, r1)
  kFlattenRow,    // (r x c) -> (1 x r*c)
  kMaxOverTime,   // column-wise max over rows; ties -> lowest row
  kL2NormalizeRow,
  kScale,         // x * attrs.scalar
  kSum,           // -> 1 x 1
  kDot,           // same shape -> 1 x 1
  kRankingLoss,   // (B x B) similarity matrix -> 1 x 1, margin in attrs.scalar
};

const char* op_name(OpKind kind);

struct OpAttrs {
  double scalar = 0.0;        // scale factor or loss margin
  std::int64_t r0 = 0, r1 = 0;  // row slice range
};

struct Value {
  std::uint32_t idx = 0;
};

template <typename Scalar>
class Tape {
 public:
  Tape() {
#ifndef NDEBUG
    check_finite_ = true;
#endif
  }

  Value constant(Tensor<Scalar> v) { return leaf(std::move(v), false); }
  Value param(Tensor<Scalar> v) { return leaf(std::move(v), true); }

  Value apply(OpKind kind, const std::vector<Value>& inputs, OpAttrs attrs = {}) {
    Node node;
    node.kind = kind;
    node.attrs = attrs;
    node.inputs.reserve(inputs.size());
    for (Value v : inputs) {
      check_handle(v);
      node.inputs.push_back(v.idx);
      node.needs_grad = node.needs_grad || nodes_[v.idx].needs_grad;
    }
    node.value = forward(node);
    if (check_finite_ && !node.value.all_finite())
      throw NumericError(std::string("non-finite value produced by ") + op_name(kind));
    nodes_.push_back(std::move(node));
    return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  // Named wrappers, in the vocabulary of the primitive list.
  Value matmul(Value a, Value b) { return apply(OpKind::kMatmul, {a, b}); }
  Value matmul_nt(Value a, Value b) { return apply(OpKind::kMatmulNT, {a, b}); }
  Value add(Value a, Value b) { return apply(OpKind::kAdd, {a, b}); }
  Value sub(Value a, Value b) { return apply(OpKind::kSub, {a, b}); }
  Value mul(Value a, Value b) { return apply(OpKind::kMul, {a, b}); }
  Value tanh(Value a) { return apply(OpKind::kTanh, {a}); }
  Value sigmoid(Value a) { return apply(OpKind::kSigmoid, {a}); }
  Value relu(Value a) { return apply(OpKind::kRelu, {a}); }
  Value hinge(Value a) { return apply(OpKind::kHinge, {a}); }
  Value row_softmax(Value a) { return apply(OpKind::kRowSoftmax, {a}); }
  Value mean_rows(Value a) { return apply(OpKind::kMeanRows, {a}); }
  Value concat_cols(const std::vector<Value>& vs) { return apply(OpKind::kConcatCols, vs); }
  Value stack_rows(const std::vector<Value>& vs) { return apply(OpKind::kStackRows, vs); }
  Value slice_rows(Value a, std::int64_t r0, std::int64_t r1) {
    OpAttrs at;
    at.r0 = r0;
    at.r1 = r1;
    return apply(OpKind::kSliceRows, {a}, at);
  }
  Value flatten_row(Value a) { return apply(OpKind::kFlattenRow, {a}); }
  Value max_over_time(Value a) { return apply(OpKind::kMaxOverTime, {a}); }
  Value l2_normalize(Value a) { return apply(OpKind::kL2NormalizeRow, {a}); }
  Value scale(Value a, double factor) {
    OpAttrs at;
    at.scalar = factor;
    return apply(OpKind::kScale, {a}, at);
  }
  Value sum(Value a) { return apply(OpKind::kSum, {a}); }
  Value dot(Value a, Value b) { return apply(OpKind::kDot, {a, b}); }
  Value ranking_loss(Value similarity, double margin) {
    OpAttrs at;
    at.scalar = margin;
    return apply(OpKind::kRankingLoss, {similarity}, at);
  }

  const Tensor<Scalar>& value(Value v) const {
    check_handle(v);
    return nodes_[v.idx].value;
  }

  // Valid after backward(); only nodes reachable from the root carry grads.
  const Tensor<Scalar>& grad(Value v) const {
    check_handle(v);
    const Node& n = nodes_[v.idx];
    if (!n.needs_grad || n.grad.numel() == 0)
      throw std::invalid_argument("gradient not computed for this node");
    return n.grad;
  }

  // Reverse sweep from a scalar root. Gradients accumulate over fan-out in
  // fixed reverse-tape order, so repeated runs are bitwise identical.
  void backward(Value root) {
    check_handle(root);
    Node& r = nodes_[root.idx];
    if (r.value.numel() != 1) throw std::invalid_argument("backward requires a scalar root");
    for (Node& n : nodes_)
      if (n.needs_grad) n.grad = Tensor<Scalar>(n.value.shape());
    if (!r.needs_grad) return;  // constant function: all-zero grads on leaves
    r.grad[0] = Scalar(1);
    for (std::uint32_t i = root.idx + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.kind == OpKind::kLeaf || n.grad.numel() == 0) continue;
      backward_step(n);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t degenerate_normalize_count() const { return degenerate_normalize_; }
  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<std::uint32_t> inputs;
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    OpAttrs attrs;
    bool needs_grad = false;
  };

  Value leaf(Tensor<Scalar> v, bool requires_grad) {
    if (check_finite_ && !v.all_finite()) throw NumericError("non-finite leaf tensor");
    Node node;
    node.kind = OpKind::kLeaf;
    node.value = std::move(v);
    node.needs_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  void check_handle(Value v) const {
    if (v.idx >= nodes_.size()) throw std::invalid_argument("value handle from another tape");
  }

  const Tensor<Scalar>& in(const Node& n, std::size_t i) const { return nodes_[n.inputs[i]].value; }

  static void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
  }

  Tensor<Scalar> forward(const Node& n) const {
    switch (n.kind) {
      case OpKind::kLeaf:
        throw std::invalid_argument("leaf is not an op");
      case OpKind::kMatmul: {
        require(n.inputs.size() == 2, "matmul takes 2 inputs");
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require(a.cols() == b.rows(), "matmul shape mismatch");
        Tensor<Scalar> out({a.rows(), b.cols()});
        emap_mut(out).noalias() = emap(a) * emap(b);
        return out;
      }
      case OpKind::kMatmulNT: {
        require(n.inputs.size() == 2, "matmul_nt takes 2 inputs");
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require(a.cols() == b.cols(), "matmul_nt shape mismatch");
        Tensor<Scalar> out({a.rows(), b.rows()});
        emap_mut(out).noalias() = emap(a) * emap(b).transpose();
        return out;
      }
      case OpKind::kAdd:
      case OpKind::kSub:
      case OpKind::kMul: {
        require(n.inputs.size() == 2, "binary op takes 2 inputs");
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require(a.same_shape(b), "elementwise shape mismatch");
        Tensor<Scalar> out(a.shape());
        for (std::int64_t i = 0; i < a.numel(); ++i)
          out[i] = n.kind == OpKind::kAdd   ? a[i] + b[i]
                   : n.kind == OpKind::kSub ? a[i] - b[i]
                                            : a[i] * b[i];
        return out;
      }
      case OpKind::kTanh:
      case OpKind::kSigmoid:
      case OpKind::kRelu:
      case OpKind::kHinge: {
        require(n.inputs.size() == 1, "unary op takes 1 input");
        const auto& a = in(n, 0);
        Tensor<Scalar> out(a.shape());
        for (std::int64_t i = 0; i < a.numel(); ++i) {
          const Scalar x = a[i];
          switch (n.kind) {
            case OpKind::kTanh: out[i] = std::tanh(x); break;
            case OpKind::kSigmoid: out[i] = Scalar(1) / (Scalar(1) + std::exp(-x)); break;
            default: out[i] = x > Scalar(0) ? x : Scalar(0); break;  // relu == hinge forward
          }
        }
        return out;
      }
      case OpKind::kRowSoftmax: {
        const auto& a = in(n, 0);
        require(a.cols() >= 1, "softmax over empty axis");
        Tensor<Scalar> out(a.shape());
        for (std::int64_t r = 0; r < a.rows(); ++r) {
          Scalar mx = a.at(r, 0);
          for (std::int64_t c = 1; c < a.cols(); ++c) mx = std::max(mx, a.at(r, c));
          Scalar denom = Scalar(0);
          for (std::int64_t c = 0; c < a.cols(); ++c) {
            out.at(r, c) = std::exp(a.at(r, c) - mx);
            denom += out.at(r, c);
          }
          for (std::int64_t c = 0; c < a.cols(); ++c) out.at(r, c) /= denom;
        }
        return out;
      }
      case OpKind::kMeanRows: {
        const auto& a = in(n, 0);
        Tensor<Scalar> out({1, a.cols()});
        for (std::int64_t r = 0; r < a.rows(); ++r)
          for (std::int64_t c = 0; c < a.cols(); ++c) out[c] += a.at(r, c);
        const Scalar inv = Scalar(1) / static_cast<Scalar>(a.rows());
        for (std::int64_t c = 0; c < a.cols(); ++c) out[c] *= inv;
        return out;
      }
      case OpKind::kConcatCols: {
        require(!n.inputs.empty(), "concat of nothing");
        const std::int64_t rows = in(n, 0).rows();
        std::int64_t cols = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          require(in(n, i).rows() == rows, "concat row mismatch");
          cols += in(n, i).cols();
        }
        Tensor<Scalar> out({rows, cols});
        std::int64_t off = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          const auto& a = in(n, i);
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < a.cols(); ++c) out.at(r, off + c) = a.at(r, c);
          off += a.cols();
        }
        return out;
      }
      case OpKind::kStackRows: {
        require(!n.inputs.empty(), "stack of nothing");
        const std::int64_t cols = in(n, 0).cols();
        for (std::size_t i = 0; i < n.inputs.size(); ++i)
          require(in(n, i).rows() == 1 && in(n, i).cols() == cols, "stack needs 1 x c rows");
        Tensor<Scalar> out({static_cast<std::int64_t>(n.inputs.size()), cols});
        for (std::size_t i = 0; i < n.inputs.size(); ++i)
          for (std::int64_t c = 0; c < cols; ++c) out.at(static_cast<std::int64_t>(i), c) = in(n, i)[c];
        return out;
      }
      case OpKind::kSliceRows: {
        const auto& a = in(n, 0);
        require(n.attrs.r0 >= 0 && n.attrs.r0 < n.attrs.r1 && n.attrs.r1 <= a.rows(),
                "row slice out of range");
        Tensor<Scalar> out({n.attrs.r1 - n.attrs.r0, a.cols()});
        for (std::int64_t r = n.attrs.r0; r < n.attrs.r1; ++r)
          for (std::int64_t c = 0; c < a.cols(); ++c) out.at(r - n.attrs.r0, c) = a.at(r, c);
        return out;
      }
      case OpKind::kFlattenRow: {
        const auto& a = in(n, 0);
        return a.reshaped({1, a.numel()});
      }
      case OpKind::kMaxOverTime: {
        const auto& a = in(n, 0);
        Tensor<Scalar> out({1, a.cols()});
        for (std::int64_t c = 0; c < a.cols(); ++c) {
          Scalar mx = a.at(0, c);
          for (std::int64_t r = 1; r < a.rows(); ++r)
            if (a.at(r, c) > mx) mx = a.at(r, c);
          out[c] = mx;
        }
        return out;
      }
      case OpKind::kL2NormalizeRow: {
        const auto& a = in(n, 0);
        require(a.rows() == 1, "l2-normalize expects a row vector");
        Scalar ss = Scalar(0);
        for (std::int64_t i = 0; i < a.numel(); ++i) ss += a[i] * a[i];
        Tensor<Scalar> out(a.shape());
        if (ss == Scalar(0)) {
          ++degenerate_normalize_;  // zero vector passes through unnormalized
          return out;
        }
        const Scalar inv = Scalar(1) / std::sqrt(ss);
        for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * inv;
        return out;
      }
      case OpKind::kScale: {
        const auto& a = in(n, 0);
        Tensor<Scalar> out(a.shape());
        const Scalar f = static_cast<Scalar>(n.attrs.scalar);
        for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * f;
        return out;
      }
      case OpKind::kSum: {
        const auto& a = in(n, 0);
        Scalar s = Scalar(0);
        for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i];
        return Tensor<Scalar>::scalar(s);
      }
      case OpKind::kDot: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require(a.same_shape(b), "dot shape mismatch");
        Scalar s = Scalar(0);
        for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
        return Tensor<Scalar>::scalar(s);
      }
      case OpKind::kRankingLoss: {
        const auto& s = in(n, 0);
        require(s.rows() == s.cols(), "ranking loss needs a square similarity matrix");
        require(s.rows() >= 2, "ranking loss needs batch size >= 2");
        const Scalar margin = static_cast<Scalar>(n.attrs.scalar);
        Scalar loss = Scalar(0);
        for (std::int64_t i = 0; i < s.rows(); ++i) {
          Scalar row_term = margin + hardest_off_diagonal(s, i, /*by_row=*/true) - s.at(i, i);
          Scalar col_term = margin + hardest_off_diagonal(s, i, /*by_row=*/false) - s.at(i, i);
          if (row_term > Scalar(0)) loss += row_term;
          if (col_term > Scalar(0)) loss += col_term;
        }
        return Tensor<Scalar>::scalar(loss);
      }
    }
    throw std::invalid_argument("unknown op kind");
  }

  // Highest off-diagonal similarity in row/column i; ties resolved to the
  // lowest index by strict comparison.
  static Scalar hardest_off_diagonal(const Tensor<Scalar>& s, std::int64_t i, bool by_row,
                                     std::int64_t* arg = nullptr) {
    Scalar best = Scalar(0);
    std::int64_t best_j = -1;
    for (std::int64_t j = 0; j < s.rows(); ++j) {
      if (j == i) continue;
      const Scalar v = by_row ? s.at(i, j) : s.at(j, i);
      if (best_j < 0 || v > best) {
        best = v;
        best_j = j;
      }
    }
    if (arg) *arg = best_j;
    return best;
  }

  void add_grad(std::uint32_t idx, std::int64_t flat, Scalar g) {
    Node& n = nodes_[idx];
    if (n.needs_grad) n.grad[flat] += g;
  }

  Tensor<Scalar>* grad_of(std::uint32_t idx) {
    Node& n = nodes_[idx];
    return n.needs_grad ? &n.grad : nullptr;
  }

  void backward_step(Node& n) {
    const Tensor<Scalar>& g = n.grad;
    switch (n.kind) {
      case OpKind::kLeaf:
        return;
      case OpKind::kMatmul: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        if (auto* ga = grad_of(n.inputs[0])) emap_mut(*ga).noalias() += emap(g) * emap(b).transpose();
        if (auto* gb = grad_of(n.inputs[1])) emap_mut(*gb).noalias() += emap(a).transpose() * emap(g);
        return;
      }
      case OpKind::kMatmulNT: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        if (auto* ga = grad_of(n.inputs[0])) emap_mut(*ga).noalias() += emap(g) * emap(b);
        if (auto* gb = grad_of(n.inputs[1])) emap_mut(*gb).noalias() += emap(g).transpose() * emap(a);
        return;
      }
      case OpKind::kAdd:
        for (std::int64_t i = 0; i < g.numel(); ++i) {
          add_grad(n.inputs[0], i, g[i]);
          add_grad(n.inputs[1], i, g[i]);
        }
        return;
      case OpKind::kSub:
        for (std::int64_t i = 0; i < g.numel(); ++i) {
          add_grad(n.inputs[0], i, g[i]);
          add_grad(n.inputs[1], i, -g[i]);
        }
        return;
      case OpKind::kMul: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        for (std::int64_t i = 0; i < g.numel(); ++i) {
          add_grad(n.inputs[0], i, g[i] * b[i]);
          add_grad(n.inputs[1], i, g[i] * a[i]);
        }
        return;
      }
      case OpKind::kTanh:
        for (std::int64_t i = 0; i < g.numel(); ++i) {
          const Scalar y = n.value[i];
          add_grad(n.inputs[0], i, g[i] * (Scalar(1) - y * y));
        }
        return;
      case OpKind::kSigmoid:
        for (std::int64_t i = 0; i < g.numel(); ++i) {
          const Scalar y = n.value[i];
          add_grad(n.inputs[0], i, g[i] * y * (Scalar(1) - y));
        }
        return;
      case OpKind::kRelu:
      case OpKind::kHinge: {
        const auto& a = in(n, 0);
        for (std::int64_t i = 0; i < g.numel(); ++i)
          if (a[i] > Scalar(0)) add_grad(n.inputs[0], i, g[i]);
        return;
      }
      case OpKind::kRowSoftmax: {
        const auto& y = n.value;
        for (std::int64_t r = 0; r < y.rows(); ++r) {
          Scalar dotv = Scalar(0);
          for (std::int64_t c = 0; c < y.cols(); ++c) dotv += g.at(r, c) * y.at(r, c);
          for (std::int64_t c = 0; c < y.cols(); ++c)
            add_grad(n.inputs[0], r * y.cols() + c, y.at(r, c) * (g.at(r, c) - dotv));
        }
        return;
      }
      case OpKind::kMeanRows: {
        const auto& a = in(n, 0);
        const Scalar inv = Scalar(1) / static_cast<Scalar>(a.rows());
        for (std::int64_t r = 0; r < a.rows(); ++r)
          for (std::int64_t c = 0; c < a.cols(); ++c)
            add_grad(n.inputs[0], r * a.cols() + c, g[c] * inv);
        return;
      }
      case OpKind::kConcatCols: {
        std::int64_t off = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          const auto& a = in(n, i);
          for (std::int64_t r = 0; r < a.rows(); ++r)
            for (std::int64_t c = 0; c < a.cols(); ++c)
              add_grad(n.inputs[i], r * a.cols() + c, g.at(r, off + c));
          off += a.cols();
        }
        return;
      }
      case OpKind::kStackRows:
        for (std::size_t i = 0; i < n.inputs.size(); ++i)
          for (std::int64_t c = 0; c < g.cols(); ++c)
            add_grad(n.inputs[i], c, g.at(static_cast<std::int64_t>(i), c));
        return;
      case OpKind::kSliceRows: {
        const auto& a = in(n, 0);
        for (std::int64_t r = n.attrs.r0; r < n.attrs.r1; ++r)
          for (std::int64_t c = 0; c < a.cols(); ++c)
            add_grad(n.inputs[0], r * a.cols() + c, g.at(r - n.attrs.r0, c));
        return;
      }
      case OpKind::kFlattenRow:
        for (std::int64_t i = 0; i < g.numel(); ++i) add_grad(n.inputs[0], i, g[i]);
        return;
      case OpKind::kMaxOverTime: {
        const auto& a = in(n, 0);
        for (std::int64_t c = 0; c < a.cols(); ++c) {
          std::int64_t best = 0;
          for (std::int64_t r = 1; r < a.rows(); ++r)
            if (a.at(r, c) > a.at(best, c)) best = r;
          add_grad(n.inputs[0], best * a.cols() + c, g[c]);
        }
        return;
      }
      case OpKind::kL2NormalizeRow: {
        const auto& a = in(n, 0);
        const auto& y = n.value;
        Scalar ss = Scalar(0);
        for (std::int64_t i = 0; i < a.numel(); ++i) ss += a[i] * a[i];
        if (ss == Scalar(0)) return;  // zero-vector subgradient: zero
        const Scalar inv_norm = Scalar(1) / std::sqrt(ss);
        Scalar gy = Scalar(0);
        for (std::int64_t i = 0; i < a.numel(); ++i) gy += g[i] * y[i];
        for (std::int64_t i = 0; i < a.numel(); ++i)
          add_grad(n.inputs[0], i, (g[i] - gy * y[i]) * inv_norm);
        return;
      }
      case OpKind::kScale: {
        const Scalar f = static_cast<Scalar>(n.attrs.scalar);
        for (std::int64_t i = 0; i < g.numel(); ++i) add_grad(n.inputs[0], i, g[i] * f);
        return;
      }
      case OpKind::kSum: {
        const auto& a = in(n, 0);
        for (std::int64_t i = 0; i < a.numel(); ++i) add_grad(n.inputs[0], i, g[0]);
        return;
      }
      case OpKind::kDot: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        for (std::int64_t i = 0; i < a.numel(); ++i) {
          add_grad(n.inputs[0], i, g[0] * b[i]);
          add_grad(n.inputs[1], i, g[0] * a[i]);
        }
        return;
      }
      case OpKind::kRankingLoss: {
        const auto& s = in(n, 0);
        const Scalar margin = static_cast<Scalar>(n.attrs.scalar);
        const Scalar g0 = g[0];
        const std::int64_t b = s.rows();
        for (std::int64_t i = 0; i < b; ++i) {
          std::int64_t jr = -1, jc = -1;
          const Scalar row_term = margin + hardest_off_diagonal(s, i, true, &jr) - s.at(i, i);
          const Scalar col_term = margin + hardest_off_diagonal(s, i, false, &jc) - s.at(i, i);
          if (row_term > Scalar(0)) {
            add_grad(n.inputs[0], i * b + jr, g0);
            add_grad(n.inputs[0], i * b + i, -g0);
          }
          if (col_term > Scalar(0)) {
            add_grad(n.inputs[0], jc * b + i, g0);
            add_grad(n.inputs[0], i * b + i, -g0);
          }
        }
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  mutable std::size_t degenerate_normalize_ = 0;
  bool check_finite_ = false;
};

using Tape32 = Tape<float>;
using Tape64 = Tape<double>;

// Builds the computation under check: receives a fresh tape plus one leaf per
// parameter tensor (in order) and returns the scalar root.
using GradCheckBuild = std::function<Value(Tape64&, const std::vector<Value>&)>;

// Central-difference gradient verification at 64-bit. Returns the max over
// all parameter coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|).
double grad_check(const GradCheckBuild& build, std::vector<Tensor64> params, double step);

}  // namespace denc
