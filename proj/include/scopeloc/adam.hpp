#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scopeloc/tensor.hpp"

namespace scopeloc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for a fixed parameter list. Parameters are matched by position.
template <typename Real>
class AdamState {
 public:
  AdamState(std::span<Parameter<Real>* const> params, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  const Tensor<Real>& first_moment(std::size_t i) const { return first_[i]; }
  const Tensor<Real>& second_moment(std::size_t i) const { return second_[i]; }

  /// Bias-corrected update of every parameter, then clears the gradients.
  void update(std::span<Parameter<Real>* const> params);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<Real>> first_;
  std::vector<Tensor<Real>> second_;
};

template <typename Real>
void adam_step(AdamState<Real>& state, std::span<Parameter<Real>* const> params) {
  state.update(params);
}

}  // namespace scopeloc
