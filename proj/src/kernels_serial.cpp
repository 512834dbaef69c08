// Reference loop nests written directly from the kernel definitions. No
// vectorization hints, no zero-skipping, no threading.

#include <cstddef>

#include "kernel_checks.hpp"
#include "scopeloc/kernels.hpp"

namespace scopeloc::kernels::serial {

template <typename Real>
void conv1d_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                    Tensor<Real>& out) {
  detail::check_conv_shapes(in, weight, bias);
  const long tokens = static_cast<long>(in.dim(0));
  const std::size_t c_in = in.dim(1);
  const std::size_t kernel = weight.dim(0);
  const std::size_t c_out = weight.dim(2);
  const long half = static_cast<long>(kernel / 2);
  out.resize({in.dim(0), c_out});
  for (long t = 0; t < tokens; ++t) {
    for (std::size_t o = 0; o < c_out; ++o) {
      Real acc = bias[o];
      for (std::size_t j = 0; j < kernel; ++j) {
        const long src = t + static_cast<long>(j) - half;
        if (src < 0 || src >= tokens) continue;
        for (std::size_t c = 0; c < c_in; ++c) {
          acc += in.at(static_cast<std::size_t>(src), c) * weight.at(j, c, o);
        }
      }
      out.at(static_cast<std::size_t>(t), o) = acc;
    }
  }
}

template <typename Real>
void conv1d_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                     const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                     Tensor<Real>& grad_weight, Tensor<Real>& grad_bias) {
  detail::check_conv_shapes(in, weight, grad_bias);
  const long tokens = static_cast<long>(in.dim(0));
  const std::size_t c_in = in.dim(1);
  const std::size_t kernel = weight.dim(0);
  const std::size_t c_out = weight.dim(2);
  const long half = static_cast<long>(kernel / 2);
  detail::check_grad_shapes(grad_out, in.dim(0), c_out, weight, grad_weight, grad_bias);

  if (grad_in != nullptr) grad_in->resize({in.dim(0), c_in});
  for (long t = 0; t < tokens; ++t) {
    for (std::size_t o = 0; o < c_out; ++o) {
      const Real g = grad_out.at(static_cast<std::size_t>(t), o);
      grad_bias[o] += g;
      for (std::size_t j = 0; j < kernel; ++j) {
        const long src = t + static_cast<long>(j) - half;
        if (src < 0 || src >= tokens) continue;
        for (std::size_t c = 0; c < c_in; ++c) {
          grad_weight.at(j, c, o) += in.at(static_cast<std::size_t>(src), c) * g;
          if (grad_in != nullptr) grad_in->at(static_cast<std::size_t>(src), c) += weight.at(j, c, o) * g;
        }
      }
    }
  }
}

template <typename Real>
void dense_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                   Tensor<Real>& out) {
  detail::check_dense_shapes(in, weight, bias);
  const std::size_t tokens = in.dim(0);
  const std::size_t f_in = in.dim(1);
  const std::size_t f_out = weight.dim(1);
  out.resize({tokens, f_out});
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t o = 0; o < f_out; ++o) {
      Real acc = bias[o];
      for (std::size_t c = 0; c < f_in; ++c) acc += in.at(t, c) * weight.at(c, o);
      out.at(t, o) = acc;
    }
  }
}

template <typename Real>
void dense_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                    const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                    Tensor<Real>& grad_weight, Tensor<Real>& grad_bias) {
  detail::check_dense_shapes(in, weight, grad_bias);
  const std::size_t tokens = in.dim(0);
  const std::size_t f_in = in.dim(1);
  const std::size_t f_out = weight.dim(1);
  detail::check_grad_shapes(grad_out, tokens, f_out, weight, grad_weight, grad_bias);
  if (grad_in != nullptr) grad_in->resize({tokens, f_in});
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t o = 0; o < f_out; ++o) {
      const Real g = grad_out.at(t, o);
      grad_bias[o] += g;
      for (std::size_t c = 0; c < f_in; ++c) {
        grad_weight.at(c, o) += in.at(t, c) * g;
        if (grad_in != nullptr) grad_in->at(t, c) += weight.at(c, o) * g;
      }
    }
  }
}

#define SCOPELOC_INSTANTIATE(Real)                                                              \
  template void conv1d_forward<Real>(const Tensor<Real>&, const Tensor<Real>&,                  \
                                     const Tensor<Real>&, Tensor<Real>&);                       \
  template void conv1d_backward<Real>(const Tensor<Real>&, const Tensor<Real>&,                 \
                                      const Tensor<Real>&, Tensor<Real>*, Tensor<Real>&,        \
                                      Tensor<Real>&);                                           \
  template void dense_forward<Real>(const Tensor<Real>&, const Tensor<Real>&,                   \
                                    const Tensor<Real>&, Tensor<Real>&);                        \
  template void dense_backward<Real>(const Tensor<Real>&, const Tensor<Real>&,                  \
                                     const Tensor<Real>&, Tensor<Real>*, Tensor<Real>&,         \
                                     Tensor<Real>&);

SCOPELOC_INSTANTIATE(float)
SCOPELOC_INSTANTIATE(double)

#undef SCOPELOC_INSTANTIATE

}  // namespace scopeloc::kernels::serial
