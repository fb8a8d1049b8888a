#include "scar/attacks.hpp"

#include "scar/errors.hpp"
#include "scar/kernels.hpp"
#include "scar/tape.hpp"

namespace scar {

void AttackConfig::validate() const {
  if (eps < 0.0f) throw ValueError("attack eps must be >= 0");
  if (steps < 1) throw ValueError("attack steps must be >= 1");
  // FGSM takes its single step directly from eps; alpha only drives PGD.
  if (kind == AttackKind::Pgd && alpha <= 0.0f)
    throw ValueError("attack alpha must be > 0 when steps > 0");
  if (domain_lo >= domain_hi) throw ValueError("attack domain bounds out of order");
}

Array project_linf(const Array& candidate, const Array& center, float eps, float domain_lo,
                   float domain_hi) {
  if (!candidate.same_shape(center))
    throw ShapeError("project_linf: candidate " + candidate.shape_str() + " vs center " +
                     center.shape_str());
  const auto& k = kernels::active();
  const size_t n = candidate.numel();
  std::vector<float> lo(n), hi(n);
  // lo = max(center - eps, domain_lo); hi = min(center + eps, domain_hi)
  for (size_t i = 0; i < n; ++i) {
    lo[i] = std::max(center.data[i] - eps, domain_lo);
    hi[i] = std::min(center.data[i] + eps, domain_hi);
  }
  Array out(candidate.shape);
  k.clamp3(candidate.data.data(), lo.data(), hi.data(), out.data.data(), n);
  return out;
}

Array input_gradient(const FrozenClassifier& model, const Array& x, std::span<const int> y) {
  Tape tape;
  const TapeForward fwd =
      forward_on_tape(tape, model.get(), x, /*x_requires_grad=*/true, /*params_require_grad=*/false);
  const auto probs = tape.softmax(fwd.logits);
  // Sum reduction keeps per-row gradients independent of the batch size.
  const auto loss = tape.cross_entropy(probs, std::vector<int>(y.begin(), y.end()),
                                       Tape::Reduction::Sum);
  tape.backward(loss);
  return tape.grad(fwd.x);
}

Array pgd(const FrozenClassifier& model, const Array& x, std::span<const int> y,
          const AttackConfig& config, const IterateObserver& observer) {
  config.validate();
  if (config.alpha <= 0.0f) throw ValueError("pgd requires alpha > 0");
  if (static_cast<int64_t>(y.size()) != x.rows())
    throw ShapeError("pgd: " + std::to_string(y.size()) + " labels for " +
                     std::to_string(x.rows()) + " inputs");
  const auto& k = kernels::active();
  const size_t n = x.numel();

  // The ball and domain bounds are fixed across iterations.
  std::vector<float> lo(n), hi(n);
  for (size_t i = 0; i < n; ++i) {
    lo[i] = std::max(x.data[i] - config.eps, config.domain_lo);
    hi[i] = std::min(x.data[i] + config.eps, config.domain_hi);
  }

  Array cur = x;
  std::vector<float> step(n);
  for (int t = 0; t < config.steps; ++t) {
    const Array g = input_gradient(model, cur, y);
    k.sign(g.data.data(), step.data(), n);
    k.axpy(config.alpha, step.data(), cur.data.data(), n);
    k.clamp3(cur.data.data(), lo.data(), hi.data(), cur.data.data(), n);
    if (observer) observer(t, cur);
  }
  return cur;
}

Array fgsm(const FrozenClassifier& model, const Array& x, std::span<const int> y, float eps) {
  AttackConfig cfg;
  cfg.kind = AttackKind::Fgsm;
  cfg.eps = eps;
  cfg.alpha = eps > 0.0f ? eps : 1.0f;  // alpha is irrelevant at eps = 0; ball collapses to x
  cfg.steps = 1;
  return pgd(model, x, y, cfg);
}

Array run_attack(const FrozenClassifier& model, const Array& x, std::span<const int> y,
                 const AttackConfig& config) {
  if (config.kind == AttackKind::Fgsm) return fgsm(model, x, y, config.eps);
  return pgd(model, x, y, config);
}

}  // namespace scar
