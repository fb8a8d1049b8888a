#pragma once

#include <cstdint>
#include <vector>

#include "scar/array.hpp"

namespace scar {

// Log arguments in cross-entropy, KL, and log() are clamped here.
inline constexpr float kLogClamp = 1e-12f;

// Reverse-mode tape over Arrays. Node creation order is a topological order,
// so the backward pass is a single reverse sweep that visits each node once.
// A tape records one loss evaluation; independent tapes are independent and
// may live on different threads.
class Tape {
 public:
  using NodeId = int32_t;
  enum class Reduction { Mean, Sum };

  // Leaves hold inputs and parameters. Only leaves created with
  // requires_grad=true (and nodes reachable from them) take part in backward.
  NodeId leaf(Array value, bool requires_grad = false);

  // Elementwise; also broadcasts a [m] bias over [n x m] rows or a scalar
  // over anything (second operand only).
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, float c);

  NodeId matmul(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  // Rowwise stabilized softmax of [n x C] logits.
  NodeId softmax(NodeId a);
  // log(max(x, kLogClamp)) elementwise
  NodeId log(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  // mean((a - b)^2) over all entries
  NodeId mse(NodeId a, NodeId b);
  // reduction over rows of -log p[i, labels[i]]
  NodeId cross_entropy(NodeId probs, std::vector<int> labels, Reduction red = Reduction::Mean);
  // mean over rows of sum_c p log(p/q)
  NodeId kl_divergence(NodeId p, NodeId q);

  const Array& value(NodeId id) const { return nodes_[id].value; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Throws on a
  // non-scalar loss. Gradients of leaves used multiple times accumulate.
  void backward(NodeId loss);

  // Valid after backward(); zero array for nodes off the loss path.
  const Array& grad(NodeId id);

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Leaf, Add, Sub, Mul, Scale, MatMul, Relu, Softmax, Log, Sum, Mean, Mse, Ce, Kl
  };

  struct Node {
    Op op;
    Array value;
    NodeId a = -1;
    NodeId b = -1;
    float c = 0.0f;
    Reduction red = Reduction::Mean;
    std::vector<int> labels;
    bool requires_grad = false;
  };

  NodeId push(Node node);
  Array& grad_buf(NodeId id);
  void backward_node(NodeId id);

  std::vector<Node> nodes_;
  std::vector<Array> grads_;
};

}  // namespace scar
