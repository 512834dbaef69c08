#pragma once

#include <stdexcept>
#include <string>

#include "scopeloc/tensor.hpp"

namespace scopeloc::kernels::detail {

template <typename Real>
void check_conv_shapes(const Tensor<Real>& in, const Tensor<Real>& weight,
                       const Tensor<Real>& bias) {
  if (in.rank() != 2 || weight.rank() != 3 || bias.rank() != 1) {
    throw std::invalid_argument("conv1d expects input T x C_in, weight K x C_in x C_out, bias C_out");
  }
  if (weight.dim(0) % 2 == 0) throw std::invalid_argument("conv1d kernel size must be odd");
  if (weight.dim(1) != in.dim(1)) {
    throw std::invalid_argument("conv1d input channels " + std::to_string(in.dim(1)) +
                                " do not match weight " + shape_string(weight.shape()));
  }
  if (bias.dim(0) != weight.dim(2)) throw std::invalid_argument("conv1d bias size mismatch");
}

template <typename Real>
void check_dense_shapes(const Tensor<Real>& in, const Tensor<Real>& weight,
                        const Tensor<Real>& bias) {
  if (in.rank() != 2 || weight.rank() != 2 || bias.rank() != 1) {
    throw std::invalid_argument("dense expects input T x F_in, weight F_in x F_out, bias F_out");
  }
  if (weight.dim(0) != in.dim(1)) {
    throw std::invalid_argument("dense input features " + std::to_string(in.dim(1)) +
                                " do not match weight " + shape_string(weight.shape()));
  }
  if (bias.dim(0) != weight.dim(1)) throw std::invalid_argument("dense bias size mismatch");
}

template <typename Real>
void check_grad_shapes(const Tensor<Real>& grad_out, std::size_t tokens, std::size_t out_features,
                       const Tensor<Real>& weight, const Tensor<Real>& grad_weight,
                       const Tensor<Real>& grad_bias) {
  if (grad_out.rank() != 2 || grad_out.dim(0) != tokens || grad_out.dim(1) != out_features) {
    throw std::invalid_argument("upstream gradient shape " + shape_string(grad_out.shape()) +
                                " does not match layer output");
  }
  if (grad_weight.shape() != weight.shape()) throw std::invalid_argument("weight gradient shape mismatch");
  if (grad_bias.size() != out_features) throw std::invalid_argument("bias gradient shape mismatch");
}

}  // namespace scopeloc::kernels::detail
