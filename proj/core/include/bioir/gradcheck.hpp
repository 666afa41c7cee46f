#pragma once

#include <functional>
#include <span>
#include <string>

#include "bioir/tensor.hpp"

namespace bioir {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;

  bool passes(double tolerance) const { return max_rel_error <= tolerance; }
};

/// Central-difference gradient check.
///
/// `forward` evaluates the scalar loss at the current parameter values;
/// `forward_backward` does the same while accumulating gradients into the
/// parameters (grads are zeroed here first). Every parameter entry theta is
/// perturbed to theta +/- h and the numeric slope (f+ - f-) / (2h) is compared
/// against the analytic gradient with
///   rel = |a - n| / max(|a|, |n|, 1e-8).
/// Throws std::runtime_error if any evaluation is non-finite.
GradCheckReport finite_diff_gradcheck(const std::function<double()>& forward,
                                      const std::function<double()>& forward_backward,
                                      std::span<Parameter* const> params,
                                      double h = 1e-5);

}  // namespace bioir
