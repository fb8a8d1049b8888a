#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scar/array.hpp"
#include "scar/tape.hpp"

namespace scar {

// Fully-connected ReLU network: layer_sizes = [d, h_1, ..., h_k, C].
struct MlpSpec {
  std::vector<int64_t> layer_sizes;

  int64_t input_dim() const { return layer_sizes.front(); }
  int64_t num_classes() const { return layer_sizes.back(); }
  size_t num_layers() const { return layer_sizes.size() - 1; }
  size_t param_count() const;
  std::string str() const;
  void validate() const;  // throws ValueError on a degenerate spec

  bool operator==(const MlpSpec&) const = default;
};

// Live classifier: parameters are mutated by training steps.
struct Classifier {
  MlpSpec spec;
  std::vector<Array> weights;  // [in x out] per layer
  std::vector<Array> biases;   // [out] per layer
  uint64_t rng_seed = 0;
};

// Deep immutable snapshot; serves pseudo-labeling and attack queries while
// the live model keeps training. Shareable across threads for inference.
class FrozenClassifier {
 public:
  explicit FrozenClassifier(Classifier snapshot) : model_(std::move(snapshot)) {}
  const Classifier& get() const { return model_; }
  const MlpSpec& spec() const { return model_.spec; }

 private:
  Classifier model_;
};

// He-style fan-in scaled uniform weights, zero biases; deterministic per seed.
Classifier init_classifier(const MlpSpec& spec, uint64_t seed);

FrozenClassifier freeze(const Classifier& model);

// Forward pass without a tape (inference / stop-gradient paths).
Array forward_logits(const Classifier& model, const Array& x);
Array predict_proba(const Classifier& model, const Array& x);
std::vector<int> predict_class(const Classifier& model, const Array& x);

Array forward_logits(const FrozenClassifier& model, const Array& x);
Array predict_proba(const FrozenClassifier& model, const Array& x);
std::vector<int> predict_class(const FrozenClassifier& model, const Array& x);

// Parameter leaves on a tape. Several forward passes of the same model can
// share one set so their parameter gradients accumulate together.
struct ModelLeaves {
  std::vector<Tape::NodeId> weights;
  std::vector<Tape::NodeId> biases;
};

ModelLeaves make_param_leaves(Tape& tape, const Classifier& model, bool requires_grad);

// Records the MLP forward pass from an existing input leaf; returns logits.
Tape::NodeId forward_with_leaves(Tape& tape, const ModelLeaves& leaves, Tape::NodeId x);

// Forward pass recorded on a tape. The input leaf and each parameter leaf
// are exposed so callers can read their gradients after backward().
struct TapeForward {
  Tape::NodeId x;
  Tape::NodeId logits;
  ModelLeaves params;
};

TapeForward forward_on_tape(Tape& tape, const Classifier& model, const Array& x,
                            bool x_requires_grad, bool params_require_grad);

// Gradients for every parameter, in the same order as Classifier::params().
struct ParamGrads {
  std::vector<Array> weights;
  std::vector<Array> biases;
};

ParamGrads collect_param_grads(Tape& tape, const ModelLeaves& leaves);

// theta <- theta - lr * grad (plus optional momentum buffer owned by caller).
void sgd_step(Classifier& model, const ParamGrads& grads, float lr);

struct MomentumState {
  std::vector<Array> weights;
  std::vector<Array> biases;
};

MomentumState make_momentum_state(const Classifier& model);
void sgd_momentum_step(Classifier& model, const ParamGrads& grads, float lr, float momentum,
                       MomentumState& state);

// Fraction of rows whose predicted class matches `labels`.
double accuracy(const Classifier& model, const Array& x, std::span<const int> labels);
double accuracy(const FrozenClassifier& model, const Array& x, std::span<const int> labels);

// FNV-1a over the raw parameter bytes; used to verify freeze isolation.
uint64_t param_hash(const Classifier& model);

}  // namespace scar
