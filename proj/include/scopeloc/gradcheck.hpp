#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "scopeloc/tensor.hpp"

namespace scopeloc {

struct GradientCheckOptions {
  double eps = 1e-4;
  /// 0 checks every entry; otherwise an evenly strided subset per parameter.
  std::size_t max_entries_per_parameter = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// |a - b| / max(1e-8, |a| + |b|)
double gradient_relative_error(double analytic, double numeric);

/// Compares analytic gradients against central differences
/// (L(theta + eps) - L(theta - eps)) / (2 eps).
///
/// `loss` evaluates the objective at the current parameter values.
/// `compute_gradients` must leave d loss / d theta in every Parameter::grad
/// (it is called once, after the gradients are zeroed).
/// Throws std::runtime_error naming the parameter if the loss becomes non-finite.
GradientCheckResult gradient_check(std::span<Parameter<double>* const> params,
                                   const std::function<double()>& loss,
                                   const std::function<void()>& compute_gradients,
                                   const GradientCheckOptions& options = {});

}  // namespace scopeloc
