#include "bioir/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bioir {

GradCheckReport finite_diff_gradcheck(const std::function<double()>& forward,
                                      const std::function<double()>& forward_backward,
                                      std::span<Parameter* const> params,
                                      double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_gradcheck: h must be positive");
  for (Parameter* p : params) p->zero_grad();
  const double base = forward_backward();
  if (!std::isfinite(base)) {
    throw std::runtime_error("finite_diff_gradcheck: non-finite loss at the base point");
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) {
    auto g = p->grad.flat();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    auto values = p.value.flat();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double f_plus = forward();
      values[j] = saved - h;
      const double f_minus = forward();
      values[j] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw std::runtime_error("finite_diff_gradcheck: non-finite loss while perturbing " +
                                 p.name);
      }
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic[pi][j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      report.checked += 1;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_parameter = p.name;
        report.worst_index = j;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace bioir
