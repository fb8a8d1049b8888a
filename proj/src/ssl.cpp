#include "scar/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scar/errors.hpp"
#include "scar/kernels.hpp"
#include "scar/rng.hpp"
#include "scar/tape.hpp"

namespace scar {

void SslMethod::validate() const {
  if (lambda < 0.0f) throw ValueError("lambda must be >= 0");
  if (kind == MethodKind::VatLite) {
    if (eps_vat <= 0.0f) throw ValueError("eps_vat must be > 0");
    if (xi <= 0.0f) throw ValueError("xi must be > 0");
    if (power_iters < 1) throw ValueError("power_iters must be >= 1");
  }
  if (kind == MethodKind::MixMatchLite) {
    if (k_aug < 1) throw ValueError("k_aug must be >= 1");
    if (t_sharp <= 0.0f || t_sharp > 1.0f) throw ValueError("t_sharp must be in (0, 1]");
    if (alpha_mix <= 0.0f) throw ValueError("alpha_mix must be > 0");
  }
  if (kind == MethodKind::FixMatchLite) {
    if (tau <= 0.0f || tau >= 1.0f) throw ValueError("tau must be in (0, 1)");
  }
  aug.validate();
}

const char* SslMethod::name() const {
  switch (kind) {
    case MethodKind::Supervised: return "supervised";
    case MethodKind::VatLite: return "vat";
    case MethodKind::MixMatchLite: return "mixmatch";
    case MethodKind::FixMatchLite: return "fixmatch";
  }
  return "?";
}

SslMethod method_from_name(const std::string& name) {
  SslMethod m;
  if (name == "supervised") m.kind = MethodKind::Supervised;
  else if (name == "vat") m.kind = MethodKind::VatLite;
  else if (name == "mixmatch") m.kind = MethodKind::MixMatchLite;
  else if (name == "fixmatch") m.kind = MethodKind::FixMatchLite;
  else throw ConfigError("unknown method '" + name + "' (supervised|vat|mixmatch|fixmatch)");
  return m;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValueError("epochs must be >= 0");
  if (batch_size < 1 || batches_per_epoch < 1) throw ValueError("batch sizes must be positive");
  if (lr <= 0.0f) throw ValueError("learning rate must be > 0");
  if (momentum < 0.0f || momentum >= 1.0f) throw ValueError("momentum must be in [0, 1)");
}

float loss_supervised(const Classifier& model, const Array& x, std::span<const int> y) {
  if (x.rows() == 0) throw ValueError("loss_supervised: empty batch");
  Tape tape;
  auto fwd = forward_on_tape(tape, model, x, false, false);
  auto loss = tape.cross_entropy(tape.softmax(fwd.logits), std::vector<int>(y.begin(), y.end()));
  return tape.value(loss).scalar_value();
}

namespace {

// Per-row L2 normalization; rows with vanishing norm become zero (the VAT
// term is then evaluated at the unperturbed input and contributes 0).
Array normalize_rows(const Array& m) {
  Array out(m.shape);
  const int64_t n = m.rows(), d = m.cols();
  for (int64_t i = 0; i < n; ++i) {
    float sq = 0.0f;
    for (int64_t j = 0; j < d; ++j) sq += m.at(i, j) * m.at(i, j);
    const float norm = std::sqrt(sq);
    if (norm > 1e-12f)
      for (int64_t j = 0; j < d; ++j) out.at(i, j) = m.at(i, j) / norm;
  }
  return out;
}

// Power iteration for the worst-case direction, with theta fixed.
Array vat_direction(const Classifier& model, const Array& x, const Array& p_clean, float xi,
                    int power_iters, uint64_t seed) {
  Rng rng(mix_seed(seed, sampling::kVatTag));
  Array r(x.shape);
  for (float& v : r.data) v = rng.normal();
  r = normalize_rows(r);
  for (int it = 0; it < power_iters; ++it) {
    Tape tape;
    auto r_leaf = tape.leaf(r, true);
    auto x_leaf = tape.leaf(x, false);
    auto params = make_param_leaves(tape, model, false);
    auto q = tape.softmax(forward_with_leaves(tape, params, tape.add(x_leaf, tape.scale(r_leaf, xi))));
    auto kl = tape.kl_divergence(tape.leaf(p_clean, false), q);
    tape.backward(kl);
    r = normalize_rows(tape.grad(r_leaf));
  }
  return r;
}

Tape::NodeId build_vat_unlabeled(Tape& tape, const Classifier& model, const ModelLeaves& params,
                                 const Array& x_ul, const SslMethod& m, uint64_t seed) {
  const Array p_clean = predict_proba(model, x_ul);  // stop-gradient target
  const Array dir = vat_direction(model, x_ul, p_clean, m.xi, m.power_iters, seed);
  Array x_adv = x_ul;
  kernels::active().axpy(m.eps_vat, dir.data.data(), x_adv.data.data(), x_adv.numel());
  auto q = tape.softmax(forward_with_leaves(tape, params, tape.leaf(std::move(x_adv), false)));
  return tape.kl_divergence(tape.leaf(p_clean, false), q);
}

// -sum(t * log p) / rows, targets constant.
Tape::NodeId soft_cross_entropy(Tape& tape, Tape::NodeId probs, Array targets) {
  const float inv_rows = 1.0f / static_cast<float>(targets.rows());
  auto t_leaf = tape.leaf(std::move(targets), false);
  return tape.scale(tape.sum(tape.mul(tape.log(probs), t_leaf)), -inv_rows);
}

struct MixedBatch {
  Array x_l, t_l;   // mixed labeled inputs and targets
  Array x_u, t_u;   // mixed unlabeled inputs and guessed targets
};

MixedBatch mixmatch_mix(const Classifier& model, const Array& x_l, std::span<const int> y_l,
                        const Array& x_ul, const SslMethod& m, uint64_t seed) {
  const int64_t nl = x_l.rows(), nu = x_ul.rows();
  const int c = static_cast<int>(model.spec.num_classes());
  const auto& k = kernels::active();

  // Guess targets: mean prediction over k_aug weak augmentations, sharpened.
  Array guess({nu, c}, 0.0f);
  for (int a = 0; a < m.k_aug; ++a) {
    const Array xa = augment(x_ul, m.aug, AugmentMode::Weak,
                             mix_seed(seed, sampling::kAugmentTag, static_cast<uint64_t>(a)));
    const Array pa = predict_proba(model, xa);
    k.axpy(1.0f, pa.data.data(), guess.data.data(), guess.numel());
  }
  k.scale(guess.data.data(), 1.0f / static_cast<float>(m.k_aug), guess.data.data(), guess.numel());
  guess = sharpen(guess, m.t_sharp);

  const Array pool_x = concat_rows(x_l, x_ul);
  const Array pool_t = concat_rows(one_hot(y_l, c), guess);
  const int64_t n = nl + nu;

  Rng rng(mix_seed(seed, sampling::kMixupTag));
  std::vector<size_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), size_t{0});
  rng.shuffle(perm);

  Array mixed_x(pool_x.shape), mixed_t(pool_t.shape);
  const int64_t d = pool_x.cols();
  for (int64_t i = 0; i < n; ++i) {
    const float b = rng.beta(m.alpha_mix, m.alpha_mix);
    const float lam = std::max(b, 1.0f - b);
    const int64_t j = static_cast<int64_t>(perm[static_cast<size_t>(i)]);
    for (int64_t f = 0; f < d; ++f)
      mixed_x.at(i, f) = lam * pool_x.at(i, f) + (1.0f - lam) * pool_x.at(j, f);
    for (int64_t f = 0; f < c; ++f)
      mixed_t.at(i, f) = lam * pool_t.at(i, f) + (1.0f - lam) * pool_t.at(j, f);
  }

  MixedBatch out;
  std::vector<size_t> head(static_cast<size_t>(nl)), tail(static_cast<size_t>(nu));
  std::iota(head.begin(), head.end(), size_t{0});
  std::iota(tail.begin(), tail.end(), static_cast<size_t>(nl));
  out.x_l = take_rows(mixed_x, head);
  out.t_l = take_rows(mixed_t, head);
  out.x_u = take_rows(mixed_x, tail);
  out.t_u = take_rows(mixed_t, tail);
  return out;
}

struct FixMatchMask {
  std::vector<size_t> kept;
  std::vector<int> pseudo;
  float fraction = 0.0f;
};

FixMatchMask fixmatch_mask(const Classifier& model, const Array& x_ul, const SslMethod& m,
                           uint64_t seed) {
  const Array x_w = augment(x_ul, m.aug, AugmentMode::Weak,
                            mix_seed(seed, sampling::kAugmentTag, 0ull));
  const Array q = predict_proba(model, x_w);
  FixMatchMask out;
  const int64_t n = q.rows(), c = q.cols();
  for (int64_t i = 0; i < n; ++i) {
    int best = 0;
    for (int64_t j = 1; j < c; ++j)
      if (q.at(i, j) > q.at(i, best)) best = static_cast<int>(j);
    if (q.at(i, best) >= m.tau) {
      out.kept.push_back(static_cast<size_t>(i));
      out.pseudo.push_back(best);
    }
  }
  out.fraction = n == 0 ? 0.0f : static_cast<float>(out.kept.size()) / static_cast<float>(n);
  return out;
}

struct LossNodes {
  Tape::NodeId labeled = -1;
  Tape::NodeId unlabeled = -1;
  Tape::NodeId total = -1;
  float mask_fraction = 0.0f;
};

LossNodes build_method_loss(Tape& tape, const Classifier& model, const ModelLeaves& params,
                            const SslMethod& method, const Array& x_l, std::span<const int> y_l,
                            const Array* x_ul, uint64_t seed) {
  LossNodes nodes;
  // MixMatch keeps its full pipeline even at lambda = 0: the labeled term is
  // the cross-entropy on the mixed batch, so the unlabeled pool must exist.
  const bool with_unlabeled =
      x_ul != nullptr && (method.kind == MethodKind::MixMatchLite ||
                          (method.kind != MethodKind::Supervised && method.lambda > 0.0f));

  if (method.kind == MethodKind::MixMatchLite && with_unlabeled) {
    const MixedBatch mixed = mixmatch_mix(model, x_l, y_l, *x_ul, method, seed);
    auto probs_l = tape.softmax(forward_with_leaves(tape, params, tape.leaf(mixed.x_l, false)));
    nodes.labeled = soft_cross_entropy(tape, probs_l, mixed.t_l);
    auto probs_u = tape.softmax(forward_with_leaves(tape, params, tape.leaf(mixed.x_u, false)));
    nodes.unlabeled = tape.mse(probs_u, tape.leaf(mixed.t_u, false));
  } else {
    auto probs_l = tape.softmax(forward_with_leaves(tape, params, tape.leaf(x_l, false)));
    nodes.labeled = tape.cross_entropy(probs_l, std::vector<int>(y_l.begin(), y_l.end()));
    if (with_unlabeled) {
      if (method.kind == MethodKind::VatLite) {
        nodes.unlabeled = build_vat_unlabeled(tape, model, params, *x_ul, method, seed);
      } else {  // FixMatch-lite
        const FixMatchMask mask = fixmatch_mask(model, *x_ul, method, seed);
        nodes.mask_fraction = mask.fraction;
        if (mask.kept.empty()) {
          nodes.unlabeled = tape.leaf(Array::scalar(0.0f), false);
        } else {
          const Array x_s = augment(*x_ul, method.aug, AugmentMode::Strong,
                                    mix_seed(seed, sampling::kAugmentTag, 1ull));
          const Array x_kept = take_rows(x_s, mask.kept);
          auto probs = tape.softmax(forward_with_leaves(tape, params, tape.leaf(x_kept, false)));
          auto ce = tape.cross_entropy(probs, mask.pseudo);
          // mean over the full unlabeled batch: masked-out samples contribute 0
          nodes.unlabeled = tape.scale(
              ce, static_cast<float>(mask.kept.size()) / static_cast<float>(x_ul->rows()));
        }
      }
    }
  }

  nodes.total = nodes.unlabeled >= 0
                    ? tape.add(nodes.labeled, tape.scale(nodes.unlabeled, method.lambda))
                    : nodes.labeled;
  return nodes;
}

}  // namespace

float loss_vat(const Classifier& model, const Array& x_unlabeled, float eps_vat, float xi,
               int power_iters, uint64_t seed) {
  SslMethod m;
  m.kind = MethodKind::VatLite;
  m.eps_vat = eps_vat;
  m.xi = xi;
  m.power_iters = power_iters;
  m.validate();
  Tape tape;
  auto params = make_param_leaves(tape, model, false);
  auto node = build_vat_unlabeled(tape, model, params, x_unlabeled, m, seed);
  return tape.value(node).scalar_value();
}

Array sharpen(const Array& p, float t_sharp) {
  if (t_sharp <= 0.0f) throw ValueError("t_sharp must be > 0");
  if (t_sharp == 1.0f) return p;
  Array out(p.shape);
  const int64_t n = p.rows(), c = p.cols();
  const float inv_t = 1.0f / t_sharp;
  for (int64_t i = 0; i < n; ++i) {
    float s = 0.0f;
    for (int64_t j = 0; j < c; ++j) {
      out.at(i, j) = std::pow(std::max(p.at(i, j), 0.0f), inv_t);
      s += out.at(i, j);
    }
    if (s > 0.0f)
      for (int64_t j = 0; j < c; ++j) out.at(i, j) /= s;
  }
  return out;
}

MixedPair mixup_fixed(const Array& x_a, const Array& p_a, const Array& x_b, const Array& p_b,
                      float lambda_m) {
  if (!x_a.same_shape(x_b) || !p_a.same_shape(p_b))
    throw ShapeError("mixup: operand shapes differ");
  MixedPair out;
  out.x = Array(x_a.shape);
  out.target = Array(p_a.shape);
  for (size_t i = 0; i < x_a.numel(); ++i)
    out.x.data[i] = lambda_m * x_a.data[i] + (1.0f - lambda_m) * x_b.data[i];
  for (size_t i = 0; i < p_a.numel(); ++i)
    out.target.data[i] = lambda_m * p_a.data[i] + (1.0f - lambda_m) * p_b.data[i];
  return out;
}

MixedPair mixup(const Array& x_a, const Array& p_a, const Array& x_b, const Array& p_b,
                float alpha_mix, uint64_t seed) {
  if (alpha_mix <= 0.0f) throw ValueError("alpha_mix must be > 0");
  Rng rng(mix_seed(seed, sampling::kMixupTag));
  const float b = rng.beta(alpha_mix, alpha_mix);
  return mixup_fixed(x_a, p_a, x_b, p_b, std::max(b, 1.0f - b));
}

LossReport loss_mixmatch_lite(const Classifier& model, const Array& x_l, std::span<const int> y_l,
                              const Array& x_ul, const SslMethod& method, uint64_t seed) {
  if (x_l.rows() == 0 || x_ul.rows() == 0) throw ValueError("mixmatch: empty batch");
  SslMethod m = method;
  m.kind = MethodKind::MixMatchLite;
  m.validate();
  Tape tape;
  auto params = make_param_leaves(tape, model, false);
  auto nodes = build_method_loss(tape, model, params, m, x_l, y_l, &x_ul, seed);
  LossReport rep;
  rep.labeled = tape.value(nodes.labeled).scalar_value();
  rep.unlabeled = nodes.unlabeled >= 0 ? tape.value(nodes.unlabeled).scalar_value() : 0.0f;
  rep.total = tape.value(nodes.total).scalar_value();
  return rep;
}

LossReport loss_fixmatch_lite(const Classifier& model, const Array& x_l, std::span<const int> y_l,
                              const Array& x_ul, const SslMethod& method, uint64_t seed) {
  if (x_l.rows() == 0) throw ValueError("fixmatch: empty labeled batch");
  SslMethod m = method;
  m.kind = MethodKind::FixMatchLite;
  m.validate();
  Tape tape;
  auto params = make_param_leaves(tape, model, false);
  auto nodes = build_method_loss(tape, model, params, m, x_l, y_l, &x_ul, seed);
  LossReport rep;
  rep.labeled = tape.value(nodes.labeled).scalar_value();
  rep.unlabeled = nodes.unlabeled >= 0 ? tape.value(nodes.unlabeled).scalar_value() : 0.0f;
  rep.total = tape.value(nodes.total).scalar_value();
  rep.mask_fraction = nodes.mask_fraction;
  return rep;
}

float loss_total(float labeled_loss, float unlabeled_loss, float lambda) {
  if (lambda < 0.0f) throw ValueError("lambda must be >= 0");
  return labeled_loss + lambda * unlabeled_loss;
}

std::vector<size_t> fixmatch_pass_indices(const Classifier& model, const Array& x_ul,
                                          const SslMethod& method, uint64_t seed) {
  return fixmatch_mask(model, x_ul, method, seed).kept;
}

namespace {

// Without-replacement stream over unlabeled indices; reshuffles on exhaustion.
class IndexStream {
 public:
  IndexStream(size_t n, Rng rng) : rng_(std::move(rng)), order_(n) {
    std::iota(order_.begin(), order_.end(), size_t{0});
    rng_.shuffle(order_);
  }

  std::vector<size_t> next(size_t count) {
    std::vector<size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) {
        rng_.shuffle(order_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  Rng rng_;
  std::vector<size_t> order_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<LossReport> train_ssl_range(Classifier& model, const Dataset& labeled,
                                        const Dataset& unlabeled, const SslMethod& method,
                                        const TrainConfig& cfg, int epoch_begin, int epoch_end) {
  method.validate();
  cfg.validate();
  if (labeled.size() == 0) throw ValueError("train_ssl: empty labeled set");
  const size_t n_l = labeled.size();
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  const bool use_unlabeled =
      unlabeled.size() > 0 && (method.kind == MethodKind::MixMatchLite ||
                               (method.kind != MethodKind::Supervised && method.lambda > 0.0f));

  MomentumState mom;
  if (cfg.momentum > 0.0f) mom = make_momentum_state(model);

  std::vector<LossReport> history;
  for (int epoch = epoch_begin; epoch < epoch_end; ++epoch) {
    Rng rng_l(mix_seed(cfg.seed, sampling::kLabeledTag, static_cast<uint64_t>(epoch)));
    const bool replace = n_l < batch * static_cast<size_t>(cfg.batches_per_epoch);
    std::vector<size_t> labeled_order;
    if (!replace) {
      labeled_order.resize(n_l);
      std::iota(labeled_order.begin(), labeled_order.end(), size_t{0});
      rng_l.shuffle(labeled_order);
    }
    IndexStream ustream(use_unlabeled ? unlabeled.size() : 1,
                        Rng(mix_seed(cfg.seed, sampling::kUnlabeledTag, static_cast<uint64_t>(epoch))));

    LossReport sum;
    for (int b = 0; b < cfg.batches_per_epoch; ++b) {
      std::vector<size_t> lidx(batch);
      if (replace) {
        for (auto& idx : lidx) idx = rng_l.uniform_index(n_l);
      } else {
        for (size_t t = 0; t < batch; ++t)
          lidx[t] = labeled_order[(static_cast<size_t>(b) * batch + t) % n_l];
      }
      const Array x_l = take_rows(labeled.features, lidx);
      std::vector<int> y_l(batch);
      for (size_t t = 0; t < batch; ++t) y_l[t] = labeled.labels[lidx[t]];

      Array x_ul;
      if (use_unlabeled) x_ul = take_rows(unlabeled.features, ustream.next(batch));

      const uint64_t bseed = mix_seed(cfg.seed, sampling::kAugmentTag,
                                      static_cast<uint64_t>(epoch), static_cast<uint64_t>(b));
      Tape tape;
      auto params = make_param_leaves(tape, model, true);
      auto nodes = build_method_loss(tape, model, params, method, x_l, y_l,
                                     use_unlabeled ? &x_ul : nullptr, bseed);
      tape.backward(nodes.total);
      const ParamGrads grads = collect_param_grads(tape, params);
      if (cfg.momentum > 0.0f)
        sgd_momentum_step(model, grads, cfg.lr, cfg.momentum, mom);
      else
        sgd_step(model, grads, cfg.lr);

      sum.labeled += tape.value(nodes.labeled).scalar_value();
      sum.unlabeled += nodes.unlabeled >= 0 ? tape.value(nodes.unlabeled).scalar_value() : 0.0f;
      sum.total += tape.value(nodes.total).scalar_value();
      sum.mask_fraction += nodes.mask_fraction;
    }
    const float inv_b = 1.0f / static_cast<float>(cfg.batches_per_epoch);
    history.push_back({sum.labeled * inv_b, sum.unlabeled * inv_b, sum.total * inv_b,
                       sum.mask_fraction * inv_b});
  }
  return history;
}

std::vector<LossReport> train_ssl(Classifier& model, const Dataset& labeled,
                                  const Dataset& unlabeled, const SslMethod& method,
                                  const TrainConfig& cfg) {
  return train_ssl_range(model, labeled, unlabeled, method, cfg, 0, cfg.epochs);
}

}  // namespace scar
