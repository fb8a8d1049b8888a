#pragma once

#include <functional>
#include <span>

#include "scar/array.hpp"
#include "scar/model.hpp"

namespace scar {

enum class AttackKind { Fgsm, Pgd };

// L-inf attack parameters. eps and alpha are in normalized [0,1] input units.
struct AttackConfig {
  AttackKind kind = AttackKind::Fgsm;
  float eps = 0.0f;
  float alpha = 0.0f;
  int steps = 1;
  float domain_lo = 0.0f;
  float domain_hi = 1.0f;

  void validate() const;
};

// Coordinatewise clamp to [center - eps, center + eps] intersected with
// [domain_lo, domain_hi].
Array project_linf(const Array& candidate, const Array& center, float eps, float domain_lo = 0.0f,
                   float domain_hi = 1.0f);

// Single sign-gradient step of size eps, projected. Equivalent by definition
// to pgd with steps=1 and alpha=eps (and implemented as exactly that call).
Array fgsm(const FrozenClassifier& model, const Array& x, std::span<const int> y, float eps);

// Iterated sign-gradient ascent on the cross-entropy of the frozen model's
// prediction at the supplied labels, projected after every step. Starts at
// x itself (no random start). The optional observer sees every iterate.
using IterateObserver = std::function<void(int step, const Array& iterate)>;
Array pgd(const FrozenClassifier& model, const Array& x, std::span<const int> y,
          const AttackConfig& config, const IterateObserver& observer = {});

// Dispatch on config.kind.
Array run_attack(const FrozenClassifier& model, const Array& x, std::span<const int> y,
                 const AttackConfig& config);

// d/dx of the summed cross-entropy CE(p(x), y); rows are independent, so the
// batched gradient is bit-identical to per-sample gradients.
Array input_gradient(const FrozenClassifier& model, const Array& x, std::span<const int> y);

}  // namespace scar
