#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scopeloc/tensor.hpp"

// Numeric kernels for the sequence CNN. The functions in scopeloc::kernels are
// the OpenMP-parallel versions used by the network; scopeloc::kernels::serial
// holds plain loop-nest reference versions of the heavy kernels, kept for tests
// and the benchmark.
//
// Layouts: feature maps are T x C row-major, conv weights K x C_in x C_out,
// dense weights F_in x F_out. Convolutions use stride 1 and zero "same" padding.
//
// Every parallel loop partitions output elements across threads and keeps the
// per-element summation order fixed, so results do not depend on thread count.

namespace scopeloc::kernels {

/// out(t,o) = bias(o) + sum_{j,c} in(t + j - K/2, c) * w(j,c,o). K must be odd.
template <typename Real>
void conv1d_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                    Tensor<Real>& out);

/// Accumulates into grad_weight / grad_bias; overwrites *grad_in when non-null.
template <typename Real>
void conv1d_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                     const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                     Tensor<Real>& grad_weight, Tensor<Real>& grad_bias);

/// Per-position linear map: out(t,o) = bias(o) + sum_c in(t,c) * w(c,o).
template <typename Real>
void dense_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                   Tensor<Real>& out);

template <typename Real>
void dense_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                    const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                    Tensor<Real>& grad_weight, Tensor<Real>& grad_bias);

template <typename Real>
void relu_forward(const Tensor<Real>& in, Tensor<Real>& out);

/// Uses the forward output as the mask (out > 0).
template <typename Real>
void relu_backward(const Tensor<Real>& out, const Tensor<Real>& grad_out, Tensor<Real>& grad_in);

template <typename Real>
void sigmoid_forward(const Tensor<Real>& in, Tensor<Real>& out);

template <typename Real>
void sigmoid_backward(const Tensor<Real>& out, const Tensor<Real>& grad_out,
                      Tensor<Real>& grad_in);

/// Softmax over consecutive groups of `group` elements (max-subtracted).
template <typename Real>
void softmax_forward(const Tensor<Real>& logits, std::size_t group, Tensor<Real>& probs);

/// grad_logits = p * (g - <p, g>) per group.
template <typename Real>
void softmax_backward(const Tensor<Real>& probs, const Tensor<Real>& grad_probs,
                      std::size_t group, Tensor<Real>& grad_logits);

/// Single-vector convenience form.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace scopeloc::kernels

namespace scopeloc::kernels::serial {

template <typename Real>
void conv1d_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                    Tensor<Real>& out);

template <typename Real>
void conv1d_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                     const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                     Tensor<Real>& grad_weight, Tensor<Real>& grad_bias);

template <typename Real>
void dense_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                   Tensor<Real>& out);

template <typename Real>
void dense_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                    const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                    Tensor<Real>& grad_weight, Tensor<Real>& grad_bias);

}  // namespace scopeloc::kernels::serial
