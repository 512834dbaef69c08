#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "kernel_checks.hpp"
#include "scopeloc/kernels.hpp"

namespace scopeloc {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

}  // namespace scopeloc

namespace scopeloc::kernels {

namespace {

using std::ptrdiff_t;

template <typename Real>
inline void axpy(Real a, const Real* __restrict x, Real* __restrict y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename Real>
inline Real dot(const Real* __restrict x, const Real* __restrict y, std::size_t n) {
  Real acc = 0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename Real>
void bias_grad(const Tensor<Real>& grad_out, Tensor<Real>& grad_bias) {
  const std::size_t tokens = grad_out.dim(0);
  const std::size_t width = grad_out.dim(1);
  for (std::size_t t = 0; t < tokens; ++t) axpy(Real(1), grad_out.row(t), grad_bias.data(), width);
}

}  // namespace

template <typename Real>
void conv1d_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                    Tensor<Real>& out) {
  detail::check_conv_shapes(in, weight, bias);
  const auto tokens = static_cast<ptrdiff_t>(in.dim(0));
  const std::size_t c_in = in.dim(1);
  const std::size_t kernel = weight.dim(0);
  const std::size_t c_out = weight.dim(2);
  const auto half = static_cast<ptrdiff_t>(kernel / 2);
  out.resize({in.dim(0), c_out});

#pragma omp parallel for schedule(static)
  for (ptrdiff_t t = 0; t < tokens; ++t) {
    Real* dst = out.row(static_cast<std::size_t>(t));
    std::copy(bias.data(), bias.data() + c_out, dst);
    for (std::size_t j = 0; j < kernel; ++j) {
      const ptrdiff_t src = t + static_cast<ptrdiff_t>(j) - half;
      if (src < 0 || src >= tokens) continue;
      const Real* x = in.row(static_cast<std::size_t>(src));
      const Real* w = weight.data() + j * c_in * c_out;
      for (std::size_t c = 0; c < c_in; ++c) {
        if (x[c] == Real(0)) continue;
        axpy(x[c], w + c * c_out, dst, c_out);
      }
    }
  }
}

template <typename Real>
void conv1d_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                     const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                     Tensor<Real>& grad_weight, Tensor<Real>& grad_bias) {
  detail::check_conv_shapes(in, weight, grad_bias);
  const auto tokens = static_cast<ptrdiff_t>(in.dim(0));
  const std::size_t c_in = in.dim(1);
  const std::size_t kernel = weight.dim(0);
  const std::size_t c_out = weight.dim(2);
  const auto half = static_cast<ptrdiff_t>(kernel / 2);
  detail::check_grad_shapes(grad_out, in.dim(0), c_out, weight, grad_weight, grad_bias);

  bias_grad(grad_out, grad_bias);

  // Weight gradient: each (j, c) row of grad_weight is owned by one thread.
  const auto rows = static_cast<ptrdiff_t>(kernel * c_in);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t jc = 0; jc < rows; ++jc) {
    const auto j = static_cast<ptrdiff_t>(static_cast<std::size_t>(jc) / c_in);
    const std::size_t c = static_cast<std::size_t>(jc) % c_in;
    Real* gw = grad_weight.data() + static_cast<std::size_t>(jc) * c_out;
    for (ptrdiff_t t = 0; t < tokens; ++t) {
      const ptrdiff_t src = t + j - half;
      if (src < 0 || src >= tokens) continue;
      const Real x = in.at(static_cast<std::size_t>(src), c);
      if (x == Real(0)) continue;
      axpy(x, grad_out.row(static_cast<std::size_t>(t)), gw, c_out);
    }
  }

  if (grad_in == nullptr) return;
  grad_in->resize({in.dim(0), c_in});
#pragma omp parallel for schedule(static)
  for (ptrdiff_t s = 0; s < tokens; ++s) {
    Real* gi = grad_in->row(static_cast<std::size_t>(s));
    for (std::size_t j = 0; j < kernel; ++j) {
      const ptrdiff_t t = s - static_cast<ptrdiff_t>(j) + half;
      if (t < 0 || t >= tokens) continue;
      const Real* g = grad_out.row(static_cast<std::size_t>(t));
      const Real* w = weight.data() + j * c_in * c_out;
      for (std::size_t c = 0; c < c_in; ++c) gi[c] += dot(g, w + c * c_out, c_out);
    }
  }
}

template <typename Real>
void dense_forward(const Tensor<Real>& in, const Tensor<Real>& weight, const Tensor<Real>& bias,
                   Tensor<Real>& out) {
  detail::check_dense_shapes(in, weight, bias);
  const auto tokens = static_cast<ptrdiff_t>(in.dim(0));
  const std::size_t f_in = in.dim(1);
  const std::size_t f_out = weight.dim(1);
  out.resize({in.dim(0), f_out});

#pragma omp parallel for schedule(static)
  for (ptrdiff_t t = 0; t < tokens; ++t) {
    Real* dst = out.row(static_cast<std::size_t>(t));
    std::copy(bias.data(), bias.data() + f_out, dst);
    const Real* x = in.row(static_cast<std::size_t>(t));
    for (std::size_t c = 0; c < f_in; ++c) {
      if (x[c] == Real(0)) continue;
      axpy(x[c], weight.data() + c * f_out, dst, f_out);
    }
  }
}

template <typename Real>
void dense_backward(const Tensor<Real>& in, const Tensor<Real>& weight,
                    const Tensor<Real>& grad_out, Tensor<Real>* grad_in,
                    Tensor<Real>& grad_weight, Tensor<Real>& grad_bias) {
  detail::check_dense_shapes(in, weight, grad_bias);
  const auto tokens = static_cast<ptrdiff_t>(in.dim(0));
  const std::size_t f_in = in.dim(1);
  const std::size_t f_out = weight.dim(1);
  detail::check_grad_shapes(grad_out, in.dim(0), f_out, weight, grad_weight, grad_bias);

  bias_grad(grad_out, grad_bias);

#pragma omp parallel for schedule(static)
  for (ptrdiff_t c = 0; c < static_cast<ptrdiff_t>(f_in); ++c) {
    Real* gw = grad_weight.data() + static_cast<std::size_t>(c) * f_out;
    for (ptrdiff_t t = 0; t < tokens; ++t) {
      const Real x = in.at(static_cast<std::size_t>(t), static_cast<std::size_t>(c));
      if (x == Real(0)) continue;
      axpy(x, grad_out.row(static_cast<std::size_t>(t)), gw, f_out);
    }
  }

  if (grad_in == nullptr) return;
  grad_in->resize({in.dim(0), f_in});
#pragma omp parallel for schedule(static)
  for (ptrdiff_t t = 0; t < tokens; ++t) {
    Real* gi = grad_in->row(static_cast<std::size_t>(t));
    const Real* g = grad_out.row(static_cast<std::size_t>(t));
    for (std::size_t c = 0; c < f_in; ++c) gi[c] = dot(g, weight.data() + c * f_out, f_out);
  }
}

template <typename Real>
void relu_forward(const Tensor<Real>& in, Tensor<Real>& out) {
  out.resize(in.shape());
  const auto n = static_cast<ptrdiff_t>(in.size());
#pragma omp parallel for simd schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) out[i] = in[i] > Real(0) ? in[i] : Real(0);
}

template <typename Real>
void relu_backward(const Tensor<Real>& out, const Tensor<Real>& grad_out, Tensor<Real>& grad_in) {
  if (out.shape() != grad_out.shape()) throw std::invalid_argument("relu gradient shape mismatch");
  grad_in.resize(out.shape());
  const auto n = static_cast<ptrdiff_t>(out.size());
#pragma omp parallel for simd schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) grad_in[i] = out[i] > Real(0) ? grad_out[i] : Real(0);
}

template <typename Real>
void sigmoid_forward(const Tensor<Real>& in, Tensor<Real>& out) {
  out.resize(in.shape());
  const auto n = static_cast<ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) {
    const Real x = in[i];
    // Branching on sign keeps exp() from overflowing.
    if (x >= Real(0)) {
      out[i] = Real(1) / (Real(1) + std::exp(-x));
    } else {
      const Real e = std::exp(x);
      out[i] = e / (Real(1) + e);
    }
  }
}

template <typename Real>
void sigmoid_backward(const Tensor<Real>& out, const Tensor<Real>& grad_out,
                      Tensor<Real>& grad_in) {
  if (out.shape() != grad_out.shape()) throw std::invalid_argument("sigmoid gradient shape mismatch");
  grad_in.resize(out.shape());
  const auto n = static_cast<ptrdiff_t>(out.size());
#pragma omp parallel for simd schedule(static)
  for (ptrdiff_t i = 0; i < n; ++i) grad_in[i] = grad_out[i] * out[i] * (Real(1) - out[i]);
}

template <typename Real>
void softmax_forward(const Tensor<Real>& logits, std::size_t group, Tensor<Real>& probs) {
  if (group == 0 || logits.size() % group != 0) {
    throw std::invalid_argument("softmax group size does not divide tensor size");
  }
  probs.resize(logits.shape());
  const auto groups = static_cast<ptrdiff_t>(logits.size() / group);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t g = 0; g < groups; ++g) {
    const Real* z = logits.data() + static_cast<std::size_t>(g) * group;
    Real* p = probs.data() + static_cast<std::size_t>(g) * group;
    const Real peak = *std::max_element(z, z + group);
    Real total = 0;
    for (std::size_t c = 0; c < group; ++c) {
      p[c] = std::exp(z[c] - peak);
      total += p[c];
    }
    for (std::size_t c = 0; c < group; ++c) p[c] /= total;
  }
}

template <typename Real>
void softmax_backward(const Tensor<Real>& probs, const Tensor<Real>& grad_probs,
                      std::size_t group, Tensor<Real>& grad_logits) {
  if (probs.shape() != grad_probs.shape()) throw std::invalid_argument("softmax gradient shape mismatch");
  if (group == 0 || probs.size() % group != 0) {
    throw std::invalid_argument("softmax group size does not divide tensor size");
  }
  grad_logits.resize(probs.shape());
  const auto groups = static_cast<ptrdiff_t>(probs.size() / group);
#pragma omp parallel for schedule(static)
  for (ptrdiff_t g = 0; g < groups; ++g) {
    const std::size_t base = static_cast<std::size_t>(g) * group;
    Real inner = 0;
    for (std::size_t c = 0; c < group; ++c) inner += probs[base + c] * grad_probs[base + c];
    for (std::size_t c = 0; c < group; ++c) {
      grad_logits[base + c] = probs[base + c] * (grad_probs[base + c] - inner);
    }
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  Tensor<double> z({logits.size()}, std::vector<double>(logits.begin(), logits.end()));
  Tensor<double> p;
  softmax_forward(z, logits.size(), p);
  return {p.values().begin(), p.values().end()};
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
                                     Tensor<Real>&);                                            \
  template void relu_forward<Real>(const Tensor<Real>&, Tensor<Real>&);                         \
  template void relu_backward<Real>(const Tensor<Real>&, const Tensor<Real>&, Tensor<Real>&);   \
  template void sigmoid_forward<Real>(const Tensor<Real>&, Tensor<Real>&);                      \
  template void sigmoid_backward<Real>(const Tensor<Real>&, const Tensor<Real>&,                \
                                       Tensor<Real>&);                                          \
  template void softmax_forward<Real>(const Tensor<Real>&, std::size_t, Tensor<Real>&);         \
  template void softmax_backward<Real>(const Tensor<Real>&, const Tensor<Real>&, std::size_t,   \
                                       Tensor<Real>&);

SCOPELOC_INSTANTIATE(float)
SCOPELOC_INSTANTIATE(double)

#undef SCOPELOC_INSTANTIATE

}  // namespace scopeloc::kernels
