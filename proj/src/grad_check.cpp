#include "scar/grad_check.hpp"

#include <cmath>

#include "scar/errors.hpp"

namespace scar {

GradCheckResult grad_check(const std::function<double(const Array&)>& value_fn,
                           const Array& analytic_grad, const Array& point, double h, double tol) {
  if (!analytic_grad.same_shape(point))
    throw ShapeError("grad_check: gradient shape " + analytic_grad.shape_str() +
                     " does not match point " + point.shape_str());
  GradCheckResult res;
  res.pass = true;
  Array probe = point;
  for (size_t i = 0; i < point.numel(); ++i) {
    const float orig = probe.data[i];
    probe.data[i] = orig + static_cast<float>(h);
    const double fp = value_fn(probe);
    probe.data[i] = orig - static_cast<float>(h);
    const double fm = value_fn(probe);
    probe.data[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw ValueError("grad_check: non-finite function value at probe coordinate " + std::to_string(i));
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = analytic_grad.data[i];
    const double rel = std::abs(numeric - analytic) / std::max(1.0, std::abs(analytic));
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_coord = i;
      res.analytic_at_worst = analytic;
      res.numeric_at_worst = numeric;
    }
  }
  res.pass = res.max_rel_err <= tol;
  return res;
}

GradCheckResult grad_check(const std::function<double(const Array&)>& value_fn,
                           const std::function<Array(const Array&)>& grad_fn,
                           const Array& point, double h, double tol) {
  return grad_check(value_fn, grad_fn(point), point, h, tol);
}

}  // namespace scar
