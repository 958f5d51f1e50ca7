#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddist/tensor.hpp"

namespace ddist {

using NodeId = std::size_t;

enum class Padding : std::uint32_t { kValid = 0, kSame = 1 };

/// Misuse of the graph API (unknown node, unseeded non-scalar backward).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Result of a reverse pass: one gradient per trainable parameter and per
/// input created as differentiable. Each has the shape of its tensor.
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor>> by_node)
      : by_node_(std::move(by_node)) {}

  bool contains(NodeId id) const { return id < by_node_.size() && by_node_[id].has_value(); }
  const Tensor& operator[](NodeId id) const;

 private:
  std::vector<std::optional<Tensor>> by_node_;
};

/// Tape of operations recorded in insertion order. Every op computes its
/// value eagerly; backward walks the tape in reverse. Insertion order is a
/// topological order, so the graph is acyclic by construction.
///
/// Conventions: relu'(0) = 0; maxpool routes its gradient to the first
/// (row-major) maximal element of each window.
class Graph {
 public:
  NodeId input(Tensor value, bool differentiable = false);
  NodeId parameter(std::string name, Tensor value);

  /// [m,k] x [k,n] -> [m,n].
  NodeId matmul(NodeId a, NodeId b);
  /// x [B,C,H,W], filters [F,C,kh,kw] -> [B,F,H',W']. kSame needs odd kernels.
  NodeId conv2d(NodeId x, NodeId filters, Padding padding);
  /// Non-overlapping 2x2 max over [B,C,H,W]; H and W must be even.
  NodeId maxpool2x2(NodeId x);
  NodeId relu(NodeId x);
  /// Bias over the last axis of a rank-2 tensor or the channel axis of a rank-4 tensor.
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId add(NodeId a, NodeId b);
  NodeId reshape(NodeId x, Shape shape);
  NodeId divide(NodeId x, float divisor);
  /// Elementwise product with a constant tensor (dropout masks).
  NodeId multiply(NodeId x, Tensor mask);
  /// Row-wise softmax over the last axis of a rank-2 tensor, max-subtracted.
  NodeId softmax(NodeId x);
  /// Mean over rows of -sum(labels * log(max(softmax(x), 1e-12))). Scalar output.
  NodeId softmax_cross_entropy(NodeId logits, Tensor labels);

  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  const std::string& name(NodeId id) const;

  /// Seeds a scalar node with 1.
  Gradients backward(NodeId seed) const;
  Gradients backward(NodeId seed, const Tensor& seed_gradient) const;

 private:
  enum class Op {
    kInput,
    kParameter,
    kMatmul,
    kConv2d,
    kMaxPool,
    kRelu,
    kAddBias,
    kAdd,
    kReshape,
    kDivide,
    kMultiply,
    kSoftmax,
    kSoftmaxCrossEntropy,
  };

  struct Node {
    Node(Op op_, std::vector<NodeId> inputs_, Tensor value_)
        : op(op_), inputs(std::move(inputs_)), value(std::move(value_)) {}

    Op op;
    std::vector<NodeId> inputs;
    Tensor value;
    bool needs_grad = false;
    bool is_leaf = false;
    std::string name;
    float scalar = 0.0f;
    Padding padding = Padding::kValid;
    Tensor aux;
    Tensor aux2;
    std::vector<std::uint32_t> index;
  };

  const Node& node(NodeId id) const;
  NodeId push(Node node);
  bool any_needs_grad(std::initializer_list<NodeId> ids) const;

  std::vector<Node> nodes_;
};

}  // namespace ddist
