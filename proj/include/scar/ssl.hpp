#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scar/data.hpp"
#include "scar/model.hpp"

namespace scar {

enum class MethodKind { Supervised, VatLite, MixMatchLite, FixMatchLite };

// Semi-supervised objective: variant tag plus its hyperparameters and the
// shared unlabeled-loss weight lambda.
struct SslMethod {
  MethodKind kind = MethodKind::Supervised;
  float lambda = 1.0f;

  // VAT-lite
  float eps_vat = 0.05f;
  float xi = 1e-6f;
  int power_iters = 1;

  // MixMatch-lite
  int k_aug = 2;
  float t_sharp = 0.5f;
  float alpha_mix = 0.75f;

  // FixMatch-lite
  float tau = 0.95f;

  AugmentationSpec aug;

  void validate() const;
  const char* name() const;
};

SslMethod method_from_name(const std::string& name);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;        // K
  int batches_per_epoch = 10; // B
  float lr = 0.3f;
  float momentum = 0.0f;      // 0 = plain SGD (the default update rule)
  uint64_t seed = 0;

  void validate() const;
};

struct LossReport {
  float labeled = 0.0f;
  float unlabeled = 0.0f;
  float total = 0.0f;
  float mask_fraction = 0.0f;  // FixMatch-lite: share of unlabeled samples past tau
};

// --- standalone loss values (no parameter update) -------------------------

float loss_supervised(const Classifier& model, const Array& x, std::span<const int> y);

// Worst-case-direction consistency: power iteration from a seeded random
// unit direction, then mean KL(stopgrad p(x) || p(x + eps_vat * r)).
float loss_vat(const Classifier& model, const Array& x_unlabeled, float eps_vat, float xi,
               int power_iters, uint64_t seed);

// p_c^(1/T) / sum, rowwise.
Array sharpen(const Array& p, float t_sharp);

struct MixedPair {
  Array x;
  Array target;
};

// lambda_m ~ Beta(alpha, alpha) folded to [1/2, 1]; convex combination of
// inputs and targets.
MixedPair mixup(const Array& x_a, const Array& p_a, const Array& x_b, const Array& p_b,
                float alpha_mix, uint64_t seed);
MixedPair mixup_fixed(const Array& x_a, const Array& p_a, const Array& x_b, const Array& p_b,
                      float lambda_m);

LossReport loss_mixmatch_lite(const Classifier& model, const Array& x_l, std::span<const int> y_l,
                              const Array& x_ul, const SslMethod& method, uint64_t seed);

LossReport loss_fixmatch_lite(const Classifier& model, const Array& x_l, std::span<const int> y_l,
                              const Array& x_ul, const SslMethod& method, uint64_t seed);

// L = L_labeled + lambda * L_unlabeled
float loss_total(float labeled_loss, float unlabeled_loss, float lambda);

// Indices of unlabeled samples whose weak-augmentation confidence clears tau
// (the FixMatch-lite selection mask; exposed for diagnostics and tests).
std::vector<size_t> fixmatch_pass_indices(const Classifier& model, const Array& x_ul,
                                          const SslMethod& method, uint64_t seed);

// --- training loop ---------------------------------------------------------

// Mini-batch SGD on the method loss for epochs [epoch_begin, epoch_end).
// Per epoch: batches_per_epoch steps on batches of batch_size. Labeled
// batches are drawn without replacement when n_l >= K*B (per-epoch shuffle),
// with replacement otherwise; unlabeled batches come from a per-epoch
// shuffled stream that reshuffles when exhausted. All randomness derives
// from (cfg.seed, absolute epoch index), so a run is reproducible and can be
// resumed at any epoch boundary. When lambda == 0 or the method is
// Supervised, the unlabeled branch is skipped entirely (no RNG consumed),
// which makes the loop bit-identical to a plain supervised trainer.
std::vector<LossReport> train_ssl_range(Classifier& model, const Dataset& labeled,
                                        const Dataset& unlabeled, const SslMethod& method,
                                        const TrainConfig& cfg, int epoch_begin, int epoch_end);

std::vector<LossReport> train_ssl(Classifier& model, const Dataset& labeled,
                                  const Dataset& unlabeled, const SslMethod& method,
                                  const TrainConfig& cfg);

// Deterministic batch index streams used by train_ssl (exposed so an
// independent trainer can reproduce the exact sampling sequence).
namespace sampling {
constexpr uint64_t kLabeledTag = 0xAA01;
constexpr uint64_t kUnlabeledTag = 0xBB02;
constexpr uint64_t kAugmentTag = 0xCC03;
constexpr uint64_t kVatTag = 0xDD04;
constexpr uint64_t kMixupTag = 0xEE05;
}  // namespace sampling

}  // namespace scar
