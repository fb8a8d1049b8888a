#include "scar/scar.hpp"

#include <cstdio>

#include "scar/errors.hpp"

namespace scar {

std::vector<int> pseudo_label_all(const FrozenClassifier& frozen, const Dataset& unlabeled) {
  return predict_class(frozen, unlabeled.features);
}

std::vector<SelectionRecord> select_robust(const FrozenClassifier& frozen, const Dataset& unlabeled,
                                           const AttackConfig& attack) {
  const std::vector<int> pseudo = pseudo_label_all(frozen, unlabeled);
  const Array x_adv = run_attack(frozen, unlabeled.features, pseudo, attack);
  const std::vector<int> adv = predict_class(frozen, x_adv);
  std::vector<SelectionRecord> records;
  records.reserve(pseudo.size());
  for (size_t j = 0; j < pseudo.size(); ++j)
    records.push_back({j, pseudo[j], adv[j], pseudo[j] == adv[j]});
  return records;
}

AugmentedLabeledSet build_augmented_labeled(const Dataset& labeled,
                                            const std::vector<SelectionRecord>& records,
                                            const Dataset& unlabeled) {
  AugmentedLabeledSet out;
  std::vector<size_t> keep;
  for (const auto& rec : records)
    if (rec.robust) keep.push_back(rec.index);

  if (keep.empty()) {
    out.data = labeled;
  } else {
    out.data.features = concat_rows(labeled.features, take_rows(unlabeled.features, keep));
    out.data.labels = labeled.labels;
    out.data.num_classes = labeled.num_classes;
    for (const auto& rec : records)
      if (rec.robust) out.data.labels.push_back(rec.pseudo_label);
  }
  out.is_pseudo.assign(labeled.size(), 0);
  out.source_index.assign(labeled.size(), -1);
  for (size_t i : keep) {
    out.is_pseudo.push_back(1);
    out.source_index.push_back(static_cast<int64_t>(i));
  }
  return out;
}

ScarResult scar_finetune(Classifier& model, const Dataset& labeled, const Dataset& unlabeled,
                         const ScarConfig& cfg, const EpochObserver& observer) {
  cfg.attack.validate();
  cfg.train.validate();
  cfg.method.validate();

  const FrozenClassifier frozen = freeze(model);
  ScarResult result;
  result.selection = select_robust(frozen, unlabeled, cfg.attack);
  AugmentedLabeledSet enlarged = build_augmented_labeled(labeled, result.selection, unlabeled);
  for (const auto& rec : result.selection)
    if (rec.robust) ++result.n_selected;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    if (cfg.reselect_each_epoch && epoch > 0) {
      // The snapshot is fixed, so this reproduces the same selection; kept
      // for experimentation.
      result.selection = select_robust(frozen, unlabeled, cfg.attack);
      enlarged = build_augmented_labeled(labeled, result.selection, unlabeled);
    }
    auto epoch_hist = train_ssl_range(model, enlarged.data, unlabeled, cfg.method, cfg.train,
                                      epoch, epoch + 1);
    result.history.push_back(epoch_hist.front());
    if (observer) observer(epoch, model, epoch_hist.front());
  }
  return result;
}

namespace {

void check_metric_lengths(std::span<const int> y, std::span<const int> clean,
                          std::span<const int> adv) {
  if (y.size() != clean.size() || y.size() != adv.size())
    throw ShapeError("sensitivity/specificity: vector length mismatch (" +
                     std::to_string(y.size()) + ", " + std::to_string(clean.size()) + ", " +
                     std::to_string(adv.size()) + ")");
}

}  // namespace

RatioStat sensitivity(std::span<const int> true_labels, std::span<const int> clean_preds,
                      std::span<const int> adv_preds) {
  check_metric_lengths(true_labels, clean_preds, adv_preds);
  RatioStat s;
  for (size_t i = 0; i < true_labels.size(); ++i) {
    if (clean_preds[i] == adv_preds[i]) {
      ++s.den;
      if (true_labels[i] == clean_preds[i]) ++s.num;
    }
  }
  return s;
}

RatioStat specificity(std::span<const int> true_labels, std::span<const int> clean_preds,
                      std::span<const int> adv_preds) {
  check_metric_lengths(true_labels, clean_preds, adv_preds);
  RatioStat s;
  for (size_t i = 0; i < true_labels.size(); ++i) {
    if (clean_preds[i] != adv_preds[i]) {
      ++s.den;
      if (true_labels[i] != clean_preds[i]) ++s.num;
    }
  }
  return s;
}

std::vector<TradeoffRow> tradeoff_table(const FrozenClassifier& frozen, const Dataset& unlabeled,
                                        std::span<const int> withheld_labels,
                                        std::span<const float> eps_list,
                                        const AttackConfig& attack_template) {
  if (eps_list.empty()) throw ValueError("tradeoff_table: empty eps list");
  if (withheld_labels.size() != unlabeled.size())
    throw ShapeError("tradeoff_table: withheld label count does not match unlabeled set");

  std::vector<TradeoffRow> rows;
  for (float eps : eps_list) {
    AttackConfig attack = attack_template;
    attack.eps = eps;
    const auto records = select_robust(frozen, unlabeled, attack);
    std::vector<int> clean(records.size()), adv(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
      clean[i] = records[i].pseudo_label;
      adv[i] = records[i].adv_label;
    }
    TradeoffRow row;
    row.eps = eps;
    row.sensitivity = sensitivity(withheld_labels, clean, adv);
    row.specificity = specificity(withheld_labels, clean, adv);
    row.n_selected = row.sensitivity.den;
    rows.push_back(row);
  }
  return rows;
}

std::string format_rate(long num, long den) {
  if (den == 0) return "-- (" + std::to_string(num) + "/" + std::to_string(den) + ")";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f (%ld/%ld)",
                100.0 * static_cast<double>(num) / static_cast<double>(den), num, den);
  return buf;
}

}  // namespace scar
