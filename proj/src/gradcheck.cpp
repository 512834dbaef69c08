#include "scopeloc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace scopeloc {

double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

std::vector<std::size_t> entries_to_check(std::size_t size, std::size_t limit) {
  std::vector<std::size_t> idx;
  if (limit == 0 || size <= limit) {
    idx.resize(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(limit);
  for (std::size_t k = 0; k < limit; ++k) idx.push_back(k * size / limit);
  return idx;
}

double checked_loss(const std::function<double()>& loss, const Parameter<double>& p,
                    std::size_t index) {
  const double value = loss();
  if (!std::isfinite(value)) {
    throw std::runtime_error("gradient check: non-finite loss while perturbing " + p.name + "[" +
                             std::to_string(index) + "]");
  }
  return value;
}

}  // namespace

GradientCheckResult gradient_check(std::span<Parameter<double>* const> params,
                                   const std::function<double()>& loss,
                                   const std::function<void()>& compute_gradients,
                                   const GradientCheckOptions& options) {
  for (auto* p : params) p->zero_grad();
  compute_gradients();

  GradientCheckResult result;
  for (auto* p : params) {
    const Tensor<double> analytic = p->grad;
    for (std::size_t i : entries_to_check(p->value.size(), options.max_entries_per_parameter)) {
      const double original = p->value[i];
      p->value[i] = original + options.eps;
      const double up = checked_loss(loss, *p, i);
      p->value[i] = original - options.eps;
      const double down = checked_loss(loss, *p, i);
      p->value[i] = original;

      const double numeric = (up - down) / (2.0 * options.eps);
      const double err = gradient_relative_error(analytic[i], numeric);
      ++result.entries_checked;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(err, result.max_relative_error);
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace scopeloc
