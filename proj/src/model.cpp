#include "scar/model.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "scar/errors.hpp"
#include "scar/kernels.hpp"
#include "scar/rng.hpp"

namespace scar {

size_t MlpSpec::param_count() const {
  size_t n = 0;
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<size_t>(layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1]);
  return n;
}

std::string MlpSpec::str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < layer_sizes.size(); ++i) {
    if (i) os << ",";
    os << layer_sizes[i];
  }
  os << "]";
  return os.str();
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw ValueError("model spec needs at least input and output layers, got " + str());
  for (int64_t s : layer_sizes)
    if (s < 1) throw ValueError("non-positive layer size in model spec " + str());
  if (num_classes() < 2)
    throw ValueError("model spec needs at least 2 output classes, got " + str());
}

Classifier init_classifier(const MlpSpec& spec, uint64_t seed) {
  spec.validate();
  Classifier model;
  model.spec = spec;
  model.rng_seed = seed;
  Rng rng(mix_seed(seed, 0x1417ull));
  for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const int64_t fan_in = spec.layer_sizes[l];
    const int64_t fan_out = spec.layer_sizes[l + 1];
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    Array w({fan_in, fan_out});
    for (float& v : w.data) v = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Array({fan_out}, 0.0f));
  }
  return model;
}

FrozenClassifier freeze(const Classifier& model) { return FrozenClassifier(model); }

Array forward_logits(const Classifier& model, const Array& x) {
  if (x.shape.size() != 2 || x.cols() != model.spec.input_dim())
    throw ShapeError("input " + x.shape_str() + " does not match model input dim " +
                     std::to_string(model.spec.input_dim()));
  const auto& k = kernels::active();
  Array h = x;
  for (size_t l = 0; l < model.weights.size(); ++l) {
    Array z = matmul(h, model.weights[l]);
    const size_t m = static_cast<size_t>(z.cols());
    for (int64_t r = 0; r < z.rows(); ++r)
      k.add(z.data.data() + r * m, model.biases[l].data.data(), z.data.data() + r * m, m);
    if (l + 1 < model.weights.size()) {
      k.relu(z.data.data(), z.data.data(), z.numel());
    }
    h = std::move(z);
  }
  return h;
}

Array predict_proba(const Classifier& model, const Array& x) {
  return softmax_rows(forward_logits(model, x));
}

std::vector<int> predict_class(const Classifier& model, const Array& x) {
  return argmax_rows(forward_logits(model, x));
}

Array forward_logits(const FrozenClassifier& model, const Array& x) {
  return forward_logits(model.get(), x);
}
Array predict_proba(const FrozenClassifier& model, const Array& x) {
  return predict_proba(model.get(), x);
}
std::vector<int> predict_class(const FrozenClassifier& model, const Array& x) {
  return predict_class(model.get(), x);
}

ModelLeaves make_param_leaves(Tape& tape, const Classifier& model, bool requires_grad) {
  ModelLeaves leaves;
  for (size_t l = 0; l < model.weights.size(); ++l) {
    leaves.weights.push_back(tape.leaf(model.weights[l], requires_grad));
    leaves.biases.push_back(tape.leaf(model.biases[l], requires_grad));
  }
  return leaves;
}

Tape::NodeId forward_with_leaves(Tape& tape, const ModelLeaves& leaves, Tape::NodeId x) {
  Tape::NodeId h = x;
  for (size_t l = 0; l < leaves.weights.size(); ++l) {
    Tape::NodeId z = tape.add(tape.matmul(h, leaves.weights[l]), leaves.biases[l]);
    h = (l + 1 < leaves.weights.size()) ? tape.relu(z) : z;
  }
  return h;
}

TapeForward forward_on_tape(Tape& tape, const Classifier& model, const Array& x,
                            bool x_requires_grad, bool params_require_grad) {
  if (x.shape.size() != 2 || x.cols() != model.spec.input_dim())
    throw ShapeError("input " + x.shape_str() + " does not match model input dim " +
                     std::to_string(model.spec.input_dim()));
  TapeForward fwd;
  fwd.x = tape.leaf(x, x_requires_grad);
  fwd.params = make_param_leaves(tape, model, params_require_grad);
  fwd.logits = forward_with_leaves(tape, fwd.params, fwd.x);
  return fwd;
}

ParamGrads collect_param_grads(Tape& tape, const ModelLeaves& leaves) {
  ParamGrads grads;
  for (auto id : leaves.weights) grads.weights.push_back(tape.grad(id));
  for (auto id : leaves.biases) grads.biases.push_back(tape.grad(id));
  return grads;
}

namespace {

void check_grad_shapes(const Classifier& model, const ParamGrads& grads) {
  if (grads.weights.size() != model.weights.size() || grads.biases.size() != model.biases.size())
    throw ShapeError("gradient count does not match parameter count");
  for (size_t l = 0; l < model.weights.size(); ++l)
    if (!grads.weights[l].same_shape(model.weights[l]) || !grads.biases[l].same_shape(model.biases[l]))
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
}

}  // namespace

void sgd_step(Classifier& model, const ParamGrads& grads, float lr) {
  if (lr < 0.0f) throw ValueError("learning rate must be non-negative");
  check_grad_shapes(model, grads);
  const auto& k = kernels::active();
  for (size_t l = 0; l < model.weights.size(); ++l) {
    k.axpy(-lr, grads.weights[l].data.data(), model.weights[l].data.data(), model.weights[l].numel());
    k.axpy(-lr, grads.biases[l].data.data(), model.biases[l].data.data(), model.biases[l].numel());
  }
}

MomentumState make_momentum_state(const Classifier& model) {
  MomentumState st;
  for (const auto& w : model.weights) st.weights.emplace_back(w.shape, 0.0f);
  for (const auto& b : model.biases) st.biases.emplace_back(b.shape, 0.0f);
  return st;
}

void sgd_momentum_step(Classifier& model, const ParamGrads& grads, float lr, float momentum,
                       MomentumState& state) {
  check_grad_shapes(model, grads);
  const auto& k = kernels::active();
  for (size_t l = 0; l < model.weights.size(); ++l) {
    // v <- momentum * v + g; theta <- theta - lr * v
    k.scale(state.weights[l].data.data(), momentum, state.weights[l].data.data(), state.weights[l].numel());
    k.axpy(1.0f, grads.weights[l].data.data(), state.weights[l].data.data(), state.weights[l].numel());
    k.axpy(-lr, state.weights[l].data.data(), model.weights[l].data.data(), model.weights[l].numel());
    k.scale(state.biases[l].data.data(), momentum, state.biases[l].data.data(), state.biases[l].numel());
    k.axpy(1.0f, grads.biases[l].data.data(), state.biases[l].data.data(), state.biases[l].numel());
    k.axpy(-lr, state.biases[l].data.data(), model.biases[l].data.data(), model.biases[l].numel());
  }
}

double accuracy(const Classifier& model, const Array& x, std::span<const int> labels) {
  const auto pred = predict_class(model, x);
  if (pred.size() != labels.size())
    throw ShapeError("accuracy: prediction/label count mismatch");
  size_t correct = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == labels[i]) ++correct;
  return pred.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred.size());
}

double accuracy(const FrozenClassifier& model, const Array& x, std::span<const int> labels) {
  return accuracy(model.get(), x, labels);
}

uint64_t param_hash(const Classifier& model) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const Array& a) {
    for (float v : a.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int s = 0; s < 32; s += 8) {
        h ^= (bits >> s) & 0xffu;
        h *= 0x100000001b3ull;
      }
    }
  };
  for (const auto& w : model.weights) feed(w);
  for (const auto& b : model.biases) feed(b);
  return h;
}

}  // namespace scar
