#include "scopeloc/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace scopeloc {

template <typename Real>
AdamState<Real>::AdamState(std::span<Parameter<Real>* const> params, AdamConfig config)
    : config_(config) {
  first_.reserve(params.size());
  second_.reserve(params.size());
  for (const auto* p : params) {
    first_.emplace_back(p->value.shape());
    second_.emplace_back(p->value.shape());
  }
}

template <typename Real>
void AdamState<Real>::update(std::span<Parameter<Real>* const> params) {
  if (params.size() != first_.size()) {
    throw std::invalid_argument("Adam state was built for a different parameter list");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const Real b1 = static_cast<Real>(config_.beta1);
  const Real b2 = static_cast<Real>(config_.beta2);
  const Real lr = static_cast<Real>(config_.learning_rate);
  const Real eps = static_cast<Real>(config_.epsilon);
  const Real inv_c1 = static_cast<Real>(1.0 / correction1);
  const Real inv_c2 = static_cast<Real>(1.0 / correction2);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<Real>& p = *params[k];
    if (p.value.shape() != first_[k].shape()) {
      throw std::invalid_argument("Adam moment shape mismatch for " + p.name);
    }
    Real* value = p.value.data();
    Real* grad = p.grad.data();
    Real* m = first_[k].data();
    Real* v = second_[k].data();
    const std::size_t n = p.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Real g = grad[i];
      m[i] = b1 * m[i] + (Real(1) - b1) * g;
      v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
      const Real m_hat = m[i] * inv_c1;
      const Real v_hat = v[i] * inv_c2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      grad[i] = Real(0);
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace scopeloc
