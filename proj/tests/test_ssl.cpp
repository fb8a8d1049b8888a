#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "scar/data.hpp"
#include "scar/errors.hpp"
#include "scar/model.hpp"
#include "scar/rng.hpp"
#include "scar/ssl.hpp"
#include "scar/tape.hpp"
#include "testutil.hpp"

using scar::Array;
using scar::Classifier;
using scar::Dataset;
using scar::MethodKind;
using scar::MlpSpec;
using scar::Rng;
using scar::SslMethod;
using scar::Tape;
using scar::TrainConfig;

namespace {

Classifier bias_only_model(std::vector<float> logit_bias) {
  const int64_t c = static_cast<int64_t>(logit_bias.size());
  Classifier m = scar::init_classifier(MlpSpec{{2, c}}, 0);
  for (float& v : m.weights[0].data) v = 0.0f;
  m.biases[0] = Array({c}, std::move(logit_bias));
  return m;
}

Dataset make_labeled(const Array& x, std::vector<int> y, int classes) {
  Dataset ds;
  ds.features = x;
  ds.labels = std::move(y);
  ds.num_classes = classes;
  return ds;
}

// Independent re-implementation of the supervised training loop using only
// the public primitives and the documented sampling discipline.
std::vector<float> plain_supervised_history(Classifier& model, const Dataset& labeled,
                                            const TrainConfig& cfg) {
  const size_t n_l = labeled.size();
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  std::vector<float> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng_l(scar::mix_seed(cfg.seed, scar::sampling::kLabeledTag, static_cast<uint64_t>(epoch)));
    const bool replace = n_l < batch * static_cast<size_t>(cfg.batches_per_epoch);
    std::vector<size_t> order;
    if (!replace) {
      order.resize(n_l);
      std::iota(order.begin(), order.end(), size_t{0});
      rng_l.shuffle(order);
    }
    float total = 0.0f;
    for (int b = 0; b < cfg.batches_per_epoch; ++b) {
      std::vector<size_t> idx(batch);
      if (replace) {
        for (auto& i : idx) i = rng_l.uniform_index(n_l);
      } else {
        for (size_t t = 0; t < batch; ++t)
          idx[t] = order[(static_cast<size_t>(b) * batch + t) % n_l];
      }
      const Array x = scar::take_rows(labeled.features, idx);
      std::vector<int> y(batch);
      for (size_t t = 0; t < batch; ++t) y[t] = labeled.labels[idx[t]];

      Tape tape;
      auto fwd = forward_on_tape(tape, model, x, false, true);
      auto loss = tape.cross_entropy(tape.softmax(fwd.logits), y);
      tape.backward(loss);
      scar::sgd_step(model, collect_param_grads(tape, fwd.params), cfg.lr);
      total += tape.value(loss).scalar_value();
    }
    history.push_back(total / static_cast<float>(cfg.batches_per_epoch));
  }
  return history;
}

}  // namespace

TEST_CASE("loss_supervised oracle values") {
  SUBCASE("saturated one-hot predictions give 0") {
    auto m = bias_only_model({100.0f, -100.0f});
    const float v = scar::loss_supervised(m, Array({2, 2}, 0.5f), std::vector<int>{0, 0});
    CHECK(v == doctest::Approx(0.0).epsilon(1e-6));
  }
  SUBCASE("uniform predictions, C=2 -> ln 2") {
    auto m = bias_only_model({0.0f, 0.0f});
    const float v = scar::loss_supervised(m, Array({3, 2}, 0.5f), std::vector<int>{0, 1, 0});
    CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  }
  SUBCASE("batched value is the mean of per-sample values") {
    Rng rng(1);
    auto m = scar::init_classifier(MlpSpec{{2, 6, 3}}, 2);
    const Array x = testutil::random_array({5, 2}, rng, 0.0f, 1.0f);
    const std::vector<int> y = {0, 1, 2, 1, 0};
    float acc = 0.0f;
    for (int64_t i = 0; i < 5; ++i)
      acc += scar::loss_supervised(m, scar::extract_row(x, i), std::vector<int>{y[static_cast<size_t>(i)]});
    const float batched = scar::loss_supervised(m, x, y);
    CHECK(batched == doctest::Approx(acc / 5.0f).epsilon(1e-5));
  }
  SUBCASE("empty batch is an error") {
    auto m = bias_only_model({0.0f, 0.0f});
    CHECK_THROWS_AS(scar::loss_supervised(m, Array({1, 2}, 0.5f), std::vector<int>{}),
                    scar::ShapeError);
  }
}

TEST_CASE("loss_vat") {
  Rng rng(2);
  SUBCASE("constant-output model gives 0") {
    auto m = bias_only_model({1.0f, -0.5f});
    const Array x = testutil::random_array({6, 2}, rng, 0.0f, 1.0f);
    CHECK(scar::loss_vat(m, x, 0.1f, 1e-6f, 1, 3) == doctest::Approx(0.0).epsilon(1e-7));
  }
  SUBCASE("nonnegative on random models") {
    for (int it = 0; it < 10; ++it) {
      auto m = scar::init_classifier(MlpSpec{{3, 8, 2}}, 50 + static_cast<uint64_t>(it));
      const Array x = testutil::random_array({4, 3}, rng, 0.0f, 1.0f);
      CHECK(scar::loss_vat(m, x, 0.1f, 1e-6f, 1, static_cast<uint64_t>(it)) >= 0.0f);
    }
  }
  SUBCASE("increases with eps_vat on a logistic model") {
    Classifier m = scar::init_classifier(MlpSpec{{1, 2}}, 0);
    m.weights[0] = Array({1, 2}, {3.0f, -3.0f});
    m.biases[0] = Array({2}, 0.0f);
    const Array x({4, 1}, {0.2f, 0.4f, 0.6f, 0.8f});
    float prev = -1.0f;
    for (float eps : {0.05f, 0.1f, 0.2f, 0.4f}) {
      const float v = scar::loss_vat(m, x, eps, 1e-6f, 1, 9);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("sharpen") {
  SUBCASE("T = 1 is the identity") {
    const Array p({1, 3}, {0.2f, 0.5f, 0.3f});
    CHECK(testutil::bits_equal(scar::sharpen(p, 1.0f), p));
  }
  SUBCASE("[0.6, 0.4] at T = 0.5 -> [0.6923, 0.3077]") {
    const Array out = scar::sharpen(Array({1, 2}, {0.6f, 0.4f}), 0.5f);
    CHECK(out.data[0] == doctest::Approx(0.36 / 0.52).epsilon(1e-5));
    CHECK(out.data[0] == doctest::Approx(0.6923).epsilon(1e-3));
    CHECK(out.data[1] == doctest::Approx(0.3077).epsilon(1e-3));
  }
  SUBCASE("uniform input stays uniform") {
    const Array out = scar::sharpen(Array({1, 4}, 0.25f), 0.5f);
    for (float v : out.data) CHECK(v == doctest::Approx(0.25f).epsilon(1e-6));
  }
  SUBCASE("sharpening reduces entropy for T <= 1") {
    Rng rng(6);
    for (int it = 0; it < 50; ++it) {
      const Array p = testutil::random_distribution(1, 5, rng, 0.01f);
      const Array q = scar::sharpen(p, 0.3f + 0.5f * rng.uniform());
      auto entropy = [](const Array& d) {
        double h = 0;
        for (float v : d.data)
          if (v > 0) h -= static_cast<double>(v) * std::log(static_cast<double>(v));
        return h;
      };
      CHECK(entropy(q) <= entropy(p) + 1e-6);
    }
  }
}

TEST_CASE("mixup") {
  Rng rng(7);
  const Array xa = testutil::random_array({1, 4}, rng, 0.0f, 1.0f);
  const Array xb = testutil::random_array({1, 4}, rng, 0.0f, 1.0f);
  const Array pa({1, 2}, {0.8f, 0.2f});
  const Array pb({1, 2}, {0.1f, 0.9f});

  SUBCASE("lambda forced to 1 returns the first pair") {
    const auto mixed = scar::mixup_fixed(xa, pa, xb, pb, 1.0f);
    CHECK(testutil::bits_equal(mixed.x, xa));
    CHECK(testutil::bits_equal(mixed.target, pa));
  }
  SUBCASE("lambda = 0.7 mixes exactly") {
    const auto mixed = scar::mixup_fixed(xa, pa, xb, pb, 0.7f);
    for (size_t i = 0; i < 4; ++i)
      CHECK(mixed.x.data[i] == doctest::Approx(0.7f * xa.data[i] + 0.3f * xb.data[i]));
    CHECK(mixed.target.data[0] == doctest::Approx(0.7f * 0.8f + 0.3f * 0.1f));
  }
  SUBCASE("targets stay distributions and lambda lands in [1/2, 1]") {
    for (int it = 0; it < 40; ++it) {
      const auto mixed = scar::mixup(xa, pa, xb, pb, 0.75f, static_cast<uint64_t>(it));
      float s = 0;
      for (float v : mixed.target.data) s += v;
      CHECK(s == doctest::Approx(1.0f).epsilon(1e-5));
      for (size_t i = 0; i < 4; ++i) {
        const float lo = std::min(xa.data[i], xb.data[i]);
        const float hi = std::max(xa.data[i], xb.data[i]);
        CHECK(mixed.x.data[i] >= lo - 1e-6f);
        CHECK(mixed.x.data[i] <= hi + 1e-6f);
        // folded lambda >= 1/2 keeps the mix closer to the first operand
        CHECK(std::abs(mixed.x.data[i] - xa.data[i]) <= std::abs(mixed.x.data[i] - xb.data[i]) + 1e-6f);
      }
    }
  }
}

TEST_CASE("loss_mixmatch_lite") {
  Rng rng(8);
  auto model = scar::init_classifier(MlpSpec{{2, 8, 2}}, 5);
  const Array x_l = testutil::random_array({4, 2}, rng, 0.0f, 1.0f);
  const std::vector<int> y_l = {0, 1, 0, 1};
  const Array x_ul = testutil::random_array({6, 2}, rng, 0.0f, 1.0f);

  SslMethod m;
  m.kind = MethodKind::MixMatchLite;
  m.lambda = 0.75f;

  SUBCASE("unlabeled term is nonnegative and the report decomposes") {
    const auto rep = scar::loss_mixmatch_lite(model, x_l, y_l, x_ul, m, 3);
    CHECK(rep.unlabeled >= 0.0f);
    CHECK(std::abs(rep.total - (rep.labeled + m.lambda * rep.unlabeled)) <= 1e-5f);
  }
  SUBCASE("lambda = 0 total equals the labeled (mixed-batch) term") {
    m.lambda = 0.0f;
    const auto rep = scar::loss_mixmatch_lite(model, x_l, y_l, x_ul, m, 3);
    CHECK(rep.total == doctest::Approx(rep.labeled).epsilon(1e-7));
    CHECK(rep.unlabeled >= 0.0f);  // still computed from the pipeline
  }
  SUBCASE("hand reduction: K=1, no noise, T=1, lambda_m=1 collapses to CE(labeled)") {
    // guessed target with one noiseless weak augmentation = p(x_u); identity
    // sharpening keeps it; lambda_m = 1 keeps every pair's first element, so
    // the labeled part scores CE(labeled) and the unlabeled part MSE(p, p) = 0.
    SslMethod lite = m;
    lite.k_aug = 1;
    lite.t_sharp = 1.0f;
    lite.aug.weak_noise = 0.0f;
    const Array guess = scar::sharpen(predict_proba(model, x_ul), lite.t_sharp);
    const Array p_ul = predict_proba(model, x_ul);
    CHECK(testutil::bits_equal(guess, p_ul));

    const auto mixed = scar::mixup_fixed(x_ul, guess, x_ul, guess, 1.0f);
    Tape t;
    auto fwd = forward_on_tape(t, model, mixed.x, false, false);
    auto mse = t.mse(t.softmax(fwd.logits), t.leaf(mixed.target));
    CHECK(t.value(mse).scalar_value() == doctest::Approx(0.0).epsilon(1e-7));

    const auto mixed_l = scar::mixup_fixed(x_l, scar::one_hot(y_l, 2), x_l, scar::one_hot(y_l, 2), 1.0f);
    CHECK(testutil::bits_equal(mixed_l.x, x_l));
    const float ce = scar::loss_supervised(model, mixed_l.x, y_l);
    const float total = scar::loss_total(ce, t.value(mse).scalar_value(), lite.lambda);
    CHECK(total == doctest::Approx(ce));
  }
  SUBCASE("k_aug < 1 is rejected") {
    m.k_aug = 0;
    CHECK_THROWS_AS(scar::loss_mixmatch_lite(model, x_l, y_l, x_ul, m, 3), scar::ValueError);
  }
}

TEST_CASE("loss_fixmatch_lite") {
  const Array x_l = Array({2, 2}, 0.5f);
  const std::vector<int> y_l = {0, 1};
  const Array x_ul = Array({4, 2}, 0.5f);

  SslMethod m;
  m.kind = MethodKind::FixMatchLite;
  m.lambda = 1.0f;
  m.tau = 0.95f;
  m.aug.weak_noise = 0.0f;   // keep q exactly at the bias-only distribution
  m.aug.strong_noise = 0.0f;
  m.aug.strong_dropout = 0.0f;

  SUBCASE("q = (0.97, 0.03) passes tau = 0.95 with pseudo-label 0") {
    auto model = bias_only_model({std::log(0.97f), std::log(0.03f)});
    const auto kept = scar::fixmatch_pass_indices(model, x_ul, m, 1);
    CHECK(kept.size() == 4);
    const auto rep = scar::loss_fixmatch_lite(model, x_l, y_l, x_ul, m, 1);
    CHECK(rep.mask_fraction == doctest::Approx(1.0f));
    // all kept, strong view predicts (0.97, 0.03) too -> CE = -ln 0.97
    CHECK(rep.unlabeled == doctest::Approx(-std::log(0.97)).epsilon(1e-5));
  }
  SUBCASE("q = (0.90, 0.10) is masked out and contributes 0") {
    auto model = bias_only_model({std::log(0.90f), std::log(0.10f)});
    CHECK(scar::fixmatch_pass_indices(model, x_ul, m, 1).empty());
    const auto rep = scar::loss_fixmatch_lite(model, x_l, y_l, x_ul, m, 1);
    CHECK(rep.mask_fraction == 0.0f);
    CHECK(rep.unlabeled == 0.0f);
  }
  SUBCASE("tau -> 1 empties the mask for a non-saturated model") {
    auto model = bias_only_model({std::log(0.97f), std::log(0.03f)});
    m.tau = 0.999f;
    const auto rep = scar::loss_fixmatch_lite(model, x_l, y_l, x_ul, m, 1);
    CHECK(rep.unlabeled == 0.0f);
  }
  SUBCASE("mask monotonicity: tau=0.97 passes a subset of tau=0.90") {
    Rng rng(13);
    auto model = scar::init_classifier(MlpSpec{{2, 16, 2}}, 21);
    const Array xs = testutil::random_array({64, 2}, rng, 0.0f, 1.0f);
    SslMethod strict = m, loose = m;
    strict.tau = 0.97f;
    loose.tau = 0.90f;
    const auto hi = scar::fixmatch_pass_indices(model, xs, strict, 5);
    const auto lo = scar::fixmatch_pass_indices(model, xs, loose, 5);
    for (size_t idx : hi)
      CHECK(std::find(lo.begin(), lo.end(), idx) != lo.end());
  }
}

TEST_CASE("loss_total") {
  CHECK(scar::loss_total(0.7f, 0.3f, 0.0f) == 0.7f);
  CHECK(scar::loss_total(0.7f, 0.3f, 1.0f) == doctest::Approx(1.0f));     // FixMatch lambda
  CHECK(scar::loss_total(0.8f, 0.4f, 0.75f) == doctest::Approx(1.1f));    // MixMatch lambda
  CHECK_THROWS_AS(scar::loss_total(1.0f, 1.0f, -0.5f), scar::ValueError);
}

TEST_CASE("train_ssl") {
  const Dataset moons = scar::gen_two_moons(300, 0.15f, 33);
  const auto split = scar::split_semi(moons, 10, 2);

  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.batches_per_epoch = 4;
  cfg.lr = 0.2f;
  cfg.seed = 123;

  SUBCASE("Supervised method matches the independent plain trainer") {
    SslMethod sup;
    sup.kind = MethodKind::Supervised;
    auto a = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
    auto b = a;
    const auto hist = scar::train_ssl(a, split.labeled, split.unlabeled, sup, cfg);
    const auto oracle = plain_supervised_history(b, split.labeled, cfg);
    REQUIRE(hist.size() == oracle.size());
    for (size_t e = 0; e < hist.size(); ++e)
      CHECK(std::abs(hist[e].total - oracle[e]) <= 1e-6f);
    CHECK(scar::param_hash(a) == scar::param_hash(b));
  }
  SUBCASE("lambda = 0 FixMatch matches the plain trainer bit for bit") {
    SslMethod fm;
    fm.kind = MethodKind::FixMatchLite;
    fm.lambda = 0.0f;
    auto a = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
    auto b = a;
    const auto hist = scar::train_ssl(a, split.labeled, split.unlabeled, fm, cfg);
    const auto oracle = plain_supervised_history(b, split.labeled, cfg);
    for (size_t e = 0; e < hist.size(); ++e)
      CHECK(std::abs(hist[e].total - oracle[e]) <= 1e-6f);
    CHECK(scar::param_hash(a) == scar::param_hash(b));
  }
  SUBCASE("epochs = 0 leaves the model unchanged") {
    SslMethod sup;
    sup.kind = MethodKind::Supervised;
    auto model = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
    const uint64_t before = scar::param_hash(model);
    TrainConfig zero = cfg;
    zero.epochs = 0;
    const auto hist = scar::train_ssl(model, split.labeled, split.unlabeled, sup, zero);
    CHECK(hist.empty());
    CHECK(scar::param_hash(model) == before);
  }
  SUBCASE("same seed gives identical final parameters") {
    for (auto kind : {MethodKind::VatLite, MethodKind::MixMatchLite, MethodKind::FixMatchLite}) {
      SslMethod m;
      m.kind = kind;
      m.lambda = kind == MethodKind::MixMatchLite ? 0.75f : 1.0f;
      auto a = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
      auto b = a;
      scar::train_ssl(a, split.labeled, split.unlabeled, m, cfg);
      scar::train_ssl(b, split.labeled, split.unlabeled, m, cfg);
      CHECK(scar::param_hash(a) == scar::param_hash(b));
    }
  }
  SUBCASE("empty labeled set is an error") {
    SslMethod sup;
    sup.kind = MethodKind::Supervised;
    auto model = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
    Dataset blank;
    CHECK_THROWS_AS(scar::train_ssl(model, blank, split.unlabeled, sup, cfg), scar::Error);
  }
  SUBCASE("momentum knob is off by default and deterministic when enabled") {
    SslMethod sup;
    sup.kind = MethodKind::Supervised;
    TrainConfig with_m = cfg;
    with_m.momentum = 0.5f;
    auto a = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
    auto b = a;
    auto c = a;
    scar::train_ssl(a, split.labeled, split.unlabeled, sup, cfg);
    scar::train_ssl(b, split.labeled, split.unlabeled, sup, with_m);
    scar::train_ssl(c, split.labeled, split.unlabeled, sup, with_m);
    CHECK(scar::param_hash(a) != scar::param_hash(b));  // momentum changes the trajectory
    CHECK(scar::param_hash(b) == scar::param_hash(c));
  }
  SUBCASE("every epoch report satisfies the total decomposition") {
    for (auto kind : {MethodKind::VatLite, MethodKind::MixMatchLite, MethodKind::FixMatchLite}) {
      SslMethod m;
      m.kind = kind;
      m.lambda = 0.6f;
      auto model = scar::init_classifier(MlpSpec{{2, 16, 2}}, 9);
      const auto hist = scar::train_ssl(model, split.labeled, split.unlabeled, m, cfg);
      for (const auto& rep : hist)
        CHECK(std::abs(rep.total - (rep.labeled + m.lambda * rep.unlabeled)) <= 1e-5f);
    }
  }
}

TEST_CASE("ssl methods hold the supervised sanity bound on two moons" * doctest::timeout(400)) {
  // mean test accuracy over 5 seeds >= supervised-only baseline - 1pt
  const int kSeeds = 5;
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.batches_per_epoch = 8;
  cfg.lr = 0.15f;

  auto run = [&](MethodKind kind, uint64_t seed) {
    const Dataset moons = scar::gen_two_moons(600, 0.2f, scar::mix_seed(seed, 0xD5));
    const Dataset test = scar::gen_two_moons(600, 0.2f, scar::mix_seed(seed, 0x7E));
    const auto split = scar::split_semi(moons, 10, seed);
    auto model = scar::init_classifier(MlpSpec{{2, 64, 64, 2}}, seed);
    SslMethod m;
    m.kind = kind;
    if (kind == MethodKind::VatLite) m.eps_vat = 0.05f;
    m.lambda = kind == MethodKind::MixMatchLite ? 0.75f : 1.0f;
    TrainConfig c = cfg;
    c.seed = seed;
    scar::train_ssl(model, split.labeled, split.unlabeled, m, c);
    return scar::accuracy(model, test.features, test.labels);
  };

  double supervised = 0;
  for (int s = 0; s < kSeeds; ++s) supervised += run(MethodKind::Supervised, 100 + s);
  supervised /= kSeeds;

  for (auto kind : {MethodKind::VatLite, MethodKind::MixMatchLite, MethodKind::FixMatchLite}) {
    double acc = 0;
    for (int s = 0; s < kSeeds; ++s) acc += run(kind, 100 + s);
    acc /= kSeeds;
    CAPTURE(static_cast<int>(kind));
    CHECK(acc >= supervised - 0.01);
  }
}
