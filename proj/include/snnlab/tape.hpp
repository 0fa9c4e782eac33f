#pragma once

#include "snnlab/common.hpp"
#include "snnlab/surrogate.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace snnlab {

/// Kinds of recorded operations. Forward values are computed eagerly at
/// record time; each kind has a matching adjoint rule in Tape::backward.
enum class OpKind : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScaleShift,  // a*x + b with scalar constants
  kExp,
  kLog,
  kAbs,
  kSign,
  kLogistic,
  kSelect,     // mask*a + (1-mask)*b, mask constant
  kMatmul,     // (m,k) x (k,n)
  kAffine,     // x(B,n) * W(m,n)^T + b(m)
  kConv2d,     // x(B,C,H,W) * K(F,C,kh,kw) + b(F), stride 1
  kSumTensors, // n-ary elementwise sum (sum over time)
  kRowSum,     // sum over all axes but the first
  kSumAll,
  kMeanAll,
  kGatherCols, // out[i] = x[i, idx[i]]
  kShiftRows,  // out[i, :] = x[i, :] + c[i], c constant
  kNormConst,  // (x - mean) * inv_std, per-feature constants
  kReshape,
  kSliceTime,  // out[b, :] = x[b, t, :]
  kHeaviside,  // step forward, surrogate derivative backward
};

template <typename S>
class Tape;

/// Lightweight handle to a node on a tape. Copies alias the same node.
template <typename S>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape<S>* tape() const { return tape_; }
  int id() const { return id_; }

  const Shape& shape() const { return tape_->node(id_).shape; }
  Eigen::Index size() const { return tape_->node(id_).values.size(); }
  ArrayX<S>& values() { return tape_->node(id_).values; }
  const ArrayX<S>& values() const { return tape_->node(id_).values; }
  bool requires_grad() const { return tape_->node(id_).requires_grad; }

  /// Accumulated gradient of a leaf. Zero-filled until a backward pass
  /// reaches this node.
  const ArrayX<S>& grad() const { return tape_->node(id_).grad; }

  /// Value of a single-element tensor.
  S item() const {
    if (size() != 1) throw ContractError("item() on tensor of size " + std::to_string(size()));
    return values()[0];
  }

 private:
  Tape<S>* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape over dense tensors. Nodes are appended in evaluation
/// order, so the record sequence is already a topological order and
/// backward is a single reverse sweep. One tape is one single-threaded
/// unit of work; distinct tapes share nothing.
template <typename S>
class Tape {
 public:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    Shape shape;
    ArrayX<S> values;
    ArrayX<S> grad;  // leaves only; accumulates across backward passes
    bool requires_grad = false;
    std::vector<int> inputs;
    // attributes; meaning depends on kind
    S s0 = S(0), s1 = S(0);
    std::vector<int> ints;
    ArrayX<S> carr, carr2;
    SurrogateSpec surrogate;
  };

  Tensor<S> leaf(Shape shape, ArrayX<S> values, bool requires_grad = false) {
    if (values.size() != shape_numel(shape))
      throw DimensionError("leaf: " + std::to_string(values.size()) + " values for shape " +
                           shape_str(shape));
    Node n;
    n.kind = OpKind::kLeaf;
    n.shape = std::move(shape);
    n.values = std::move(values);
    n.requires_grad = requires_grad;
    if (requires_grad) n.grad = ArrayX<S>::Zero(n.values.size());
    return push(std::move(n));
  }

  Tensor<S> scalar(S v, bool requires_grad = false) {
    ArrayX<S> a(1);
    a[0] = v;
    return leaf({1}, std::move(a), requires_grad);
  }

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  /// Appends a non-leaf node; requires_grad is inherited from the inputs.
  Tensor<S> push(Node n) {
    if (n.kind != OpKind::kLeaf) {
      bool rg = false;
      for (int i : n.inputs) rg = rg || nodes_[static_cast<std::size_t>(i)].requires_grad;
      n.requires_grad = rg;
    }
    nodes_.push_back(std::move(n));
    return Tensor<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  /// Reverse sweep from a scalar seed. Every leaf with requires_grad
  /// receives += of its adjoint: calling backward twice without zero_grad
  /// accumulates exactly twice the gradient.
  void backward(const Tensor<S>& seed) {
    if (seed.tape() != this) throw ContractError("backward: seed from another tape");
    if (seed.size() != 1) throw ContractError("backward: seed must be scalar");
    const int top = seed.id();
    std::vector<ArrayX<S>> adj(static_cast<std::size_t>(top) + 1);
    adj[static_cast<std::size_t>(top)] = ArrayX<S>::Ones(1);
    auto sink = [&](int id) -> ArrayX<S>& {
      auto& a = adj[static_cast<std::size_t>(id)];
      if (a.size() == 0) a = ArrayX<S>::Zero(nodes_[static_cast<std::size_t>(id)].values.size());
      return a;
    };
    for (int i = top; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.requires_grad) continue;
      const ArrayX<S>& g = adj[static_cast<std::size_t>(i)];
      if (g.size() == 0) continue;  // not on a path to the seed
      if (n.kind == OpKind::kLeaf) {
        n.grad += g;
        continue;
      }
      backward_node(n, g, sink);
    }
  }

  /// Zeroes the accumulated gradients of all leaves.
  void zero_grad() {
    for (Node& n : nodes_)
      if (n.kind == OpKind::kLeaf && n.requires_grad) n.grad.setZero();
  }

 private:
  template <typename Sink>
  void backward_node(const Node& n, const ArrayX<S>& g, Sink&& sink) {
    auto rg = [&](int slot) { return nodes_[static_cast<std::size_t>(n.inputs[slot])].requires_grad; };
    auto vals = [&](int slot) -> const ArrayX<S>& {
      return nodes_[static_cast<std::size_t>(n.inputs[slot])].values;
    };
    auto acc = [&](int slot) -> ArrayX<S>& { return sink(n.inputs[slot]); };

    switch (n.kind) {
      case OpKind::kLeaf:
        break;
      case OpKind::kAdd:
        if (rg(0)) acc(0) += g;
        if (rg(1)) acc(1) += g;
        break;
      case OpKind::kSub:
        if (rg(0)) acc(0) += g;
        if (rg(1)) acc(1) -= g;
        break;
      case OpKind::kMul:
        if (rg(0)) acc(0) += g * vals(1);
        if (rg(1)) acc(1) += g * vals(0);
        break;
      case OpKind::kScaleShift:
        if (rg(0)) acc(0) += n.s0 * g;
        break;
      case OpKind::kExp:
        if (rg(0)) acc(0) += g * n.values;
        break;
      case OpKind::kLog:
        if (rg(0)) acc(0) += g / vals(0);
        break;
      case OpKind::kAbs:
        if (rg(0)) acc(0) += g * vals(0).sign();  // sign(0) = 0
        break;
      case OpKind::kSign:
        break;  // piecewise constant: zero derivative a.e.
      case OpKind::kLogistic:
        if (rg(0)) acc(0) += g * n.values * (S(1) - n.values);
        break;
      case OpKind::kSelect:
        if (rg(0)) acc(0) += g * n.carr;
        if (rg(1)) acc(1) += g * (S(1) - n.carr);
        break;
      case OpKind::kMatmul: {
        const int m = n.ints[0], k = n.ints[1], c = n.ints[2];
        auto G = rowmat(g, m, c);
        if (rg(0)) rowmat_mut(acc(0), m, k) += G * rowmat(vals(1), k, c).transpose();
        if (rg(1)) rowmat_mut(acc(1), k, c) += rowmat(vals(0), m, k).transpose() * G;
        break;
      }
      case OpKind::kAffine: {
        const int b = n.ints[0], in = n.ints[1], out = n.ints[2];
        auto G = rowmat(g, b, out);
        if (rg(0)) rowmat_mut(acc(0), b, in) += G * rowmat(vals(1), out, in);
        if (rg(1)) rowmat_mut(acc(1), out, in) += G.transpose() * rowmat(vals(0), b, in);
        if (rg(2)) acc(2) += G.colwise().sum().array().transpose();
        break;
      }
      case OpKind::kConv2d:
        backward_conv2d(n, g, sink);
        break;
      case OpKind::kSumTensors:
        for (std::size_t s = 0; s < n.inputs.size(); ++s)
          if (rg(static_cast<int>(s))) acc(static_cast<int>(s)) += g;
        break;
      case OpKind::kRowSum: {
        if (!rg(0)) break;
        const int rows = n.ints[0], inner = n.ints[1];
        ArrayX<S>& a = acc(0);
        for (int r = 0; r < rows; ++r) a.segment(r * inner, inner) += g[r];
        break;
      }
      case OpKind::kSumAll:
        if (rg(0)) acc(0) += g[0];
        break;
      case OpKind::kMeanAll:
        if (rg(0)) acc(0) += g[0] / static_cast<S>(vals(0).size());
        break;
      case OpKind::kGatherCols: {
        if (!rg(0)) break;
        const int cols = n.ints[0];
        ArrayX<S>& a = acc(0);
        for (Eigen::Index r = 0; r < g.size(); ++r)
          a[r * cols + n.ints[1 + static_cast<int>(r)]] += g[r];
        break;
      }
      case OpKind::kShiftRows:
        if (rg(0)) acc(0) += g;
        break;
      case OpKind::kNormConst: {
        if (!rg(0)) break;
        const Eigen::Index d = n.carr2.size();
        ArrayX<S>& a = acc(0);
        for (Eigen::Index off = 0; off < g.size(); off += d)
          a.segment(off, d) += g.segment(off, d) * n.carr2;
        break;
      }
      case OpKind::kReshape:
        if (rg(0)) acc(0) += g;
        break;
      case OpKind::kSliceTime: {
        if (!rg(0)) break;
        const int batch = n.ints[0], steps = n.ints[1], inner = n.ints[2], t = n.ints[3];
        ArrayX<S>& a = acc(0);
        for (int b = 0; b < batch; ++b)
          a.segment((b * steps + t) * inner, inner) += g.segment(b * inner, inner);
        break;
      }
      case OpKind::kHeaviside: {
        if (!rg(0)) break;
        ArrayX<S>& a = acc(0);
        const ArrayX<S>& u = vals(0);
        for (Eigen::Index j = 0; j < u.size(); ++j)
          a[j] += g[j] * surrogate_derivative<S>(n.surrogate, u[j] - n.s0);
        break;
      }
    }
  }

  template <typename Sink>
  void backward_conv2d(const Node& n, const ArrayX<S>& g, Sink&& sink) {
    const int B = n.ints[0], C = n.ints[1], H = n.ints[2], W = n.ints[3];
    const int F = n.ints[4], K = n.ints[5], pad = n.ints[6];
    const int OH = H + 2 * pad - K + 1, OW = W + 2 * pad - K + 1;
    const bool need_x = nodes_[static_cast<std::size_t>(n.inputs[0])].requires_grad;
    const bool need_k = nodes_[static_cast<std::size_t>(n.inputs[1])].requires_grad;
    const bool need_b = nodes_[static_cast<std::size_t>(n.inputs[2])].requires_grad;
    const ArrayX<S>& x = nodes_[static_cast<std::size_t>(n.inputs[0])].values;
    const ArrayX<S>& k = nodes_[static_cast<std::size_t>(n.inputs[1])].values;
    for (int b = 0; b < B; ++b)
      for (int f = 0; f < F; ++f)
        for (int oh = 0; oh < OH; ++oh)
          for (int ow = 0; ow < OW; ++ow) {
            const S gv = g[((b * F + f) * OH + oh) * OW + ow];
            if (gv == S(0)) continue;
            if (need_b) sink(n.inputs[2])[f] += gv;
            for (int c = 0; c < C; ++c)
              for (int kh = 0; kh < K; ++kh) {
                const int ih = oh + kh - pad;
                if (ih < 0 || ih >= H) continue;
                for (int kw = 0; kw < K; ++kw) {
                  const int iw = ow + kw - pad;
                  if (iw < 0 || iw >= W) continue;
                  const Eigen::Index xi = ((b * C + c) * H + ih) * W + iw;
                  const Eigen::Index ki = ((f * C + c) * K + kh) * K + kw;
                  if (need_x) sink(n.inputs[0])[xi] += gv * k[ki];
                  if (need_k) sink(n.inputs[1])[ki] += gv * x[xi];
                }
              }
          }
  }

  using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  static Eigen::Map<const RowMat> rowmat(const ArrayX<S>& a, int r, int c) {
    return Eigen::Map<const RowMat>(a.data(), r, c);
  }
  static Eigen::Map<RowMat> rowmat_mut(ArrayX<S>& a, int r, int c) {
    return Eigen::Map<RowMat>(a.data(), r, c);
  }

  std::vector<Node> nodes_;

  template <typename T>
  friend class OpBuilder;
};

}  // namespace snnlab
