#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scar/attacks.hpp"
#include "scar/data.hpp"
#include "scar/model.hpp"
#include "scar/ssl.hpp"

namespace scar {

// Outcome of the robustness test for one unlabeled sample.
struct SelectionRecord {
  size_t index;      // position in the unlabeled set
  int pseudo_label;  // frozen model's prediction on the clean sample
  int adv_label;     // frozen model's prediction on the attacked sample
  bool robust;       // pseudo_label == adv_label
};

struct ScarConfig {
  AttackConfig attack;            // FGSM by default
  TrainConfig train;
  SslMethod method;               // objective used during fine-tuning
  bool reselect_each_epoch = false;
};

// num/den with an undefined value when den == 0.
struct RatioStat {
  long num = 0;
  long den = 0;
  std::optional<double> value() const {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

struct TradeoffRow {
  float eps = 0.0f;
  RatioStat sensitivity;
  RatioStat specificity;
  long n_selected = 0;
};

// Labeled set enlarged with robust pseudo-labeled samples. Original entries
// come first and keep their true labels; each added entry records the
// unlabeled index it came from.
struct AugmentedLabeledSet {
  Dataset data;
  std::vector<uint8_t> is_pseudo;
  std::vector<int64_t> source_index;  // -1 for original labeled entries
};

std::vector<int> pseudo_label_all(const FrozenClassifier& frozen, const Dataset& unlabeled);

// Attack every unlabeled sample at its pseudo-label; a sample is robust when
// the frozen model's prediction survives the attack.
std::vector<SelectionRecord> select_robust(const FrozenClassifier& frozen,
                                           const Dataset& unlabeled, const AttackConfig& attack);

AugmentedLabeledSet build_augmented_labeled(const Dataset& labeled,
                                            const std::vector<SelectionRecord>& records,
                                            const Dataset& unlabeled);

struct ScarResult {
  std::vector<SelectionRecord> selection;
  std::vector<LossReport> history;
  size_t n_selected = 0;
};

using EpochObserver = std::function<void(int epoch, const Classifier& model, const LossReport&)>;

// Freeze the pretrained model, select robust pseudo-labeled samples once
// (per epoch if reselect_each_epoch, which cannot change the outcome under a
// fixed snapshot and deterministic attack), then continue mini-batch
// training on the enlarged labeled set plus the untouched unlabeled set,
// starting from the pretrained parameters.
ScarResult scar_finetune(Classifier& model, const Dataset& labeled, const Dataset& unlabeled,
                         const ScarConfig& cfg, const EpochObserver& observer = {});

// Among attack-robust samples, the fraction whose prediction is correct.
RatioStat sensitivity(std::span<const int> true_labels, std::span<const int> clean_preds,
                      std::span<const int> adv_preds);

// Among attack-fragile samples, the fraction whose prediction is wrong.
RatioStat specificity(std::span<const int> true_labels, std::span<const int> clean_preds,
                      std::span<const int> adv_preds);

// One row per eps value: run the selection and score it against the
// withheld labels. Evaluation-only path.
std::vector<TradeoffRow> tradeoff_table(const FrozenClassifier& frozen, const Dataset& unlabeled,
                                        std::span<const int> withheld_labels,
                                        std::span<const float> eps_list,
                                        const AttackConfig& attack_template);

// "92.22 (7587/8227)" — percentage with the raw counts in brackets.
std::string format_rate(long num, long den);

}  // namespace scar
