#pragma once

#include <cstddef>
#include <functional>

#include "scar/array.hpp"

namespace scar {

struct GradCheckResult {
  bool pass = false;
  double max_rel_err = 0.0;
  size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares an analytic gradient against central finite differences,
// coordinate by coordinate. Relative error uses denominator
// max(1, |analytic|). Throws ValueError if the function evaluates to a
// non-finite value at any probe point.
GradCheckResult grad_check(const std::function<double(const Array&)>& value_fn,
                           const Array& analytic_grad, const Array& point, double h, double tol);

// Convenience: analytic gradient produced by a callback (e.g. a tape build).
GradCheckResult grad_check(const std::function<double(const Array&)>& value_fn,
                           const std::function<Array(const Array&)>& grad_fn,
                           const Array& point, double h, double tol);

}  // namespace scar
