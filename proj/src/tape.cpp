#include "scar/tape.hpp"

#include <cmath>

#include "scar/errors.hpp"
#include "scar/kernels.hpp"

namespace scar {

namespace {

// Broadcast classes accepted by add/sub/mul.
enum class Bcast { Same, BiasRow, ScalarRhs };

Bcast classify_broadcast(const Array& a, const Array& b, const char* what) {
  if (a.same_shape(b)) return Bcast::Same;
  if (b.is_scalar()) return Bcast::ScalarRhs;
  if (a.shape.size() == 2 && b.shape.size() == 1 && b.shape[0] == a.shape[1]) return Bcast::BiasRow;
  throw ShapeError(std::string(what) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

}  // namespace

Tape::NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Array value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Array& av = nodes_[a].value;
  const Array& bv = nodes_[b].value;
  const Bcast bc = classify_broadcast(av, bv, "add");
  Array out(av.shape);
  const auto& k = kernels::active();
  if (bc == Bcast::Same) {
    k.add(av.data.data(), bv.data.data(), out.data.data(), av.numel());
  } else if (bc == Bcast::ScalarRhs) {
    const float s = bv.data[0];
    for (size_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + s;
  } else {
    const size_t m = static_cast<size_t>(av.shape[1]);
    for (int64_t r = 0; r < av.shape[0]; ++r)
      k.add(av.data.data() + r * m, bv.data.data(), out.data.data() + r * m, m);
  }
  Node n;
  n.op = Op::Add;
  n.value = std::move(out);
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Array& av = nodes_[a].value;
  const Array& bv = nodes_[b].value;
  const Bcast bc = classify_broadcast(av, bv, "sub");
  Array out(av.shape);
  const auto& k = kernels::active();
  if (bc == Bcast::Same) {
    k.sub(av.data.data(), bv.data.data(), out.data.data(), av.numel());
  } else if (bc == Bcast::ScalarRhs) {
    const float s = bv.data[0];
    for (size_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] - s;
  } else {
    const size_t m = static_cast<size_t>(av.shape[1]);
    for (int64_t r = 0; r < av.shape[0]; ++r)
      k.sub(av.data.data() + r * m, bv.data.data(), out.data.data() + r * m, m);
  }
  Node n;
  n.op = Op::Sub;
  n.value = std::move(out);
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Array& av = nodes_[a].value;
  const Array& bv = nodes_[b].value;
  const Bcast bc = classify_broadcast(av, bv, "mul");
  Array out(av.shape);
  const auto& k = kernels::active();
  if (bc == Bcast::Same) {
    k.mul(av.data.data(), bv.data.data(), out.data.data(), av.numel());
  } else if (bc == Bcast::ScalarRhs) {
    k.scale(av.data.data(), bv.data[0], out.data.data(), av.numel());
  } else {
    const size_t m = static_cast<size_t>(av.shape[1]);
    for (int64_t r = 0; r < av.shape[0]; ++r)
      k.mul(av.data.data() + r * m, bv.data.data(), out.data.data() + r * m, m);
  }
  Node n;
  n.op = Op::Mul;
  n.value = std::move(out);
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, float c) {
  Node n;
  n.op = Op::Scale;
  n.value = scar::scale(nodes_[a].value, c);
  n.a = a;
  n.c = c;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  Node n;
  n.op = Op::MatMul;
  n.value = scar::matmul(nodes_[a].value, nodes_[b].value);
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = Op::Relu;
  n.value = scar::relu(nodes_[a].value);
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::softmax(NodeId a) {
  Node n;
  n.op = Op::Softmax;
  n.value = softmax_rows(nodes_[a].value);
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::log(NodeId a) {
  const Array& av = nodes_[a].value;
  Array out(av.shape);
  for (size_t i = 0; i < av.numel(); ++i)
    out.data[i] = std::log(std::max(av.data[i], kLogClamp));
  Node n;
  n.op = Op::Log;
  n.value = std::move(out);
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId a) {
  Node n;
  n.op = Op::Sum;
  n.value = Array::scalar(kernels::active().reduce_sum(nodes_[a].value.data.data(), nodes_[a].value.numel()));
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::mean(NodeId a) {
  const size_t count = nodes_[a].value.numel();
  Node n;
  n.op = Op::Mean;
  n.value = Array::scalar(kernels::active().reduce_sum(nodes_[a].value.data.data(), count) /
                          static_cast<float>(count));
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::mse(NodeId a, NodeId b) {
  const Array& av = nodes_[a].value;
  const Array& bv = nodes_[b].value;
  if (!av.same_shape(bv))
    throw ShapeError("mse: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  std::vector<float> diff(av.numel());
  const auto& k = kernels::active();
  k.sub(av.data.data(), bv.data.data(), diff.data(), diff.size());
  const float v = k.dot(diff.data(), diff.data(), diff.size()) / static_cast<float>(diff.size());
  Node n;
  n.op = Op::Mse;
  n.value = Array::scalar(v);
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::cross_entropy(NodeId probs, std::vector<int> labels, Reduction red) {
  const Array& pv = nodes_[probs].value;
  if (pv.shape.size() != 2)
    throw ShapeError("cross_entropy expects [n x C] probabilities, got " + pv.shape_str());
  const int64_t n = pv.rows(), c = pv.cols();
  if (static_cast<int64_t>(labels.size()) != n)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  float total = 0.0f;
  for (int64_t i = 0; i < n; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= c)
      throw ValueError("cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(c) + ")");
    total -= std::log(std::max(pv.at(i, y), kLogClamp));
  }
  if (red == Reduction::Mean) total /= static_cast<float>(n);
  Node node;
  node.op = Op::Ce;
  node.value = Array::scalar(total);
  node.a = probs;
  node.red = red;
  node.labels = std::move(labels);
  node.requires_grad = nodes_[probs].requires_grad;
  return push(std::move(node));
}

Tape::NodeId Tape::kl_divergence(NodeId p, NodeId q) {
  const Array& pv = nodes_[p].value;
  const Array& qv = nodes_[q].value;
  if (pv.shape.size() != 2 || !pv.same_shape(qv))
    throw ShapeError("kl_divergence: shape mismatch " + pv.shape_str() + " vs " + qv.shape_str());
  const int64_t n = pv.rows(), c = pv.cols();
  float total = 0.0f;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < c; ++j) {
      const float pij = pv.at(i, j);
      total += pij * (std::log(std::max(pij, kLogClamp)) - std::log(std::max(qv.at(i, j), kLogClamp)));
    }
  Node node;
  node.op = Op::Kl;
  node.value = Array::scalar(total / static_cast<float>(n));
  node.a = p;
  node.b = q;
  node.requires_grad = nodes_[p].requires_grad || nodes_[q].requires_grad;
  return push(std::move(node));
}

Array& Tape::grad_buf(NodeId id) {
  if (grads_[id].numel() == 0) grads_[id] = Array(nodes_[id].value.shape, 0.0f);
  return grads_[id];
}

const Array& Tape::grad(NodeId id) {
  if (grads_.size() != nodes_.size()) grads_.assign(nodes_.size(), Array{});
  return grad_buf(id);
}

void Tape::backward(NodeId loss) {
  if (!nodes_[loss].value.is_scalar())
    throw ShapeError("backward requires a scalar loss, got " + nodes_[loss].value.shape_str());
  grads_.assign(nodes_.size(), Array{});
  if (!nodes_[loss].requires_grad) return;  // constant loss: all gradients stay zero
  grad_buf(loss).data[0] = 1.0f;
  for (NodeId id = loss; id >= 0; --id) {
    if (!nodes_[id].requires_grad || grads_[id].numel() == 0) continue;
    backward_node(id);
  }
}

void Tape::backward_node(NodeId id) {
  const Node& node = nodes_[id];
  const Array& g = grads_[id];
  const auto& k = kernels::active();

  const auto wants = [&](NodeId p) { return p >= 0 && nodes_[p].requires_grad; };

  switch (node.op) {
    case Op::Leaf:
      break;

    case Op::Add:
    case Op::Sub: {
      const float bsign = node.op == Op::Sub ? -1.0f : 1.0f;
      if (wants(node.a)) k.axpy(1.0f, g.data.data(), grad_buf(node.a).data.data(), g.numel());
      if (wants(node.b)) {
        Array& gb = grad_buf(node.b);
        const Array& bv = nodes_[node.b].value;
        if (bv.same_shape(g)) {
          k.axpy(bsign, g.data.data(), gb.data.data(), g.numel());
        } else if (bv.is_scalar()) {
          gb.data[0] += bsign * k.reduce_sum(g.data.data(), g.numel());
        } else {  // bias row over [n x m]
          const size_t m = bv.numel();
          for (int64_t r = 0; r < g.shape[0]; ++r)
            k.axpy(bsign, g.data.data() + r * m, gb.data.data(), m);
        }
      }
      break;
    }

    case Op::Mul: {
      const Array& av = nodes_[node.a].value;
      const Array& bv = nodes_[node.b].value;
      if (bv.same_shape(av)) {
        if (wants(node.a)) k.mul_acc(g.data.data(), bv.data.data(), grad_buf(node.a).data.data(), g.numel());
        if (wants(node.b)) k.mul_acc(g.data.data(), av.data.data(), grad_buf(node.b).data.data(), g.numel());
      } else if (bv.is_scalar()) {
        if (wants(node.a)) k.axpy(bv.data[0], g.data.data(), grad_buf(node.a).data.data(), g.numel());
        if (wants(node.b)) grad_buf(node.b).data[0] += k.dot(g.data.data(), av.data.data(), g.numel());
      } else {  // row broadcast
        const size_t m = bv.numel();
        if (wants(node.a)) {
          Array& ga = grad_buf(node.a);
          for (int64_t r = 0; r < g.shape[0]; ++r)
            k.mul_acc(g.data.data() + r * m, bv.data.data(), ga.data.data() + r * m, m);
        }
        if (wants(node.b)) {
          Array& gb = grad_buf(node.b);
          for (int64_t r = 0; r < g.shape[0]; ++r)
            k.mul_acc(g.data.data() + r * m, av.data.data() + r * m, gb.data.data(), m);
        }
      }
      break;
    }

    case Op::Scale:
      if (wants(node.a)) k.axpy(node.c, g.data.data(), grad_buf(node.a).data.data(), g.numel());
      break;

    case Op::MatMul: {
      const Array& av = nodes_[node.a].value;
      const Array& bv = nodes_[node.b].value;
      const size_t n = static_cast<size_t>(av.rows());
      const size_t kk = static_cast<size_t>(av.cols());
      const size_t m = static_cast<size_t>(bv.cols());
      if (wants(node.a))
        k.matmul_nt(g.data.data(), bv.data.data(), grad_buf(node.a).data.data(), n, m, kk, true);
      if (wants(node.b))
        k.matmul_tn(av.data.data(), g.data.data(), grad_buf(node.b).data.data(), kk, n, m, true);
      break;
    }

    case Op::Relu:
      if (wants(node.a))
        k.relu_grad_acc(nodes_[node.a].value.data.data(), g.data.data(),
                        grad_buf(node.a).data.data(), g.numel());
      break;

    case Op::Softmax: {
      if (!wants(node.a)) break;
      const Array& p = node.value;
      Array& ga = grad_buf(node.a);
      const int64_t rows = p.rows(), cols = p.cols();
      for (int64_t i = 0; i < rows; ++i) {
        const float* pr = p.data.data() + i * cols;
        const float* gr = g.data.data() + i * cols;
        float dotv = 0.0f;
        for (int64_t j = 0; j < cols; ++j) dotv += gr[j] * pr[j];
        float* out = ga.data.data() + i * cols;
        for (int64_t j = 0; j < cols; ++j) out[j] += pr[j] * (gr[j] - dotv);
      }
      break;
    }

    case Op::Log: {
      if (!wants(node.a)) break;
      const Array& x = nodes_[node.a].value;
      Array& ga = grad_buf(node.a);
      for (size_t i = 0; i < x.numel(); ++i)
        if (x.data[i] > kLogClamp) ga.data[i] += g.data[i] / x.data[i];
      break;
    }

    case Op::Sum: {
      if (!wants(node.a)) break;
      Array& ga = grad_buf(node.a);
      const float gs = g.data[0];
      for (float& v : ga.data) v += gs;
      break;
    }

    case Op::Mean: {
      if (!wants(node.a)) break;
      Array& ga = grad_buf(node.a);
      const float gs = g.data[0] / static_cast<float>(ga.numel());
      for (float& v : ga.data) v += gs;
      break;
    }

    case Op::Mse: {
      const Array& av = nodes_[node.a].value;
      const Array& bv = nodes_[node.b].value;
      const float gs = 2.0f * g.data[0] / static_cast<float>(av.numel());
      if (wants(node.a)) {
        Array& ga = grad_buf(node.a);
        for (size_t i = 0; i < av.numel(); ++i) ga.data[i] += gs * (av.data[i] - bv.data[i]);
      }
      if (wants(node.b)) {
        Array& gb = grad_buf(node.b);
        for (size_t i = 0; i < av.numel(); ++i) gb.data[i] -= gs * (av.data[i] - bv.data[i]);
      }
      break;
    }

    case Op::Ce: {
      if (!wants(node.a)) break;
      const Array& p = nodes_[node.a].value;
      Array& ga = grad_buf(node.a);
      const int64_t rows = p.rows(), cols = p.cols();
      const float gs = node.red == Reduction::Mean ? g.data[0] / static_cast<float>(rows) : g.data[0];
      for (int64_t i = 0; i < rows; ++i) {
        const int y = node.labels[static_cast<size_t>(i)];
        const float pij = p.at(i, y);
        if (pij > kLogClamp) ga.data[static_cast<size_t>(i * cols + y)] -= gs / pij;
      }
      break;
    }

    case Op::Kl: {
      const Array& p = nodes_[node.a].value;
      const Array& q = nodes_[node.b].value;
      const float gs = g.data[0] / static_cast<float>(p.rows());
      if (wants(node.a)) {
        Array& ga = grad_buf(node.a);
        for (size_t i = 0; i < p.numel(); ++i) {
          const float lp = std::log(std::max(p.data[i], kLogClamp));
          const float lq = std::log(std::max(q.data[i], kLogClamp));
          float d = lp - lq;
          if (p.data[i] > kLogClamp) d += 1.0f;
          ga.data[i] += gs * d;
        }
      }
      if (wants(node.b)) {
        Array& gb = grad_buf(node.b);
        for (size_t i = 0; i < p.numel(); ++i)
          if (q.data[i] > kLogClamp) gb.data[i] -= gs * p.data[i] / q.data[i];
      }
      break;
    }
  }
}

}  // namespace scar
