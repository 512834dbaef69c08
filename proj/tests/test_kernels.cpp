#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "scopeloc/adam.hpp"
#include "scopeloc/gradcheck.hpp"
#include "scopeloc/kernels.hpp"
#include "scopeloc/rng.hpp"

using namespace scopeloc;
namespace k = scopeloc::kernels;

namespace {

template <typename Real>
Tensor<Real> random_tensor(Rng& rng, std::vector<std::size_t> shape, double sparsity = 0.0) {
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform() < sparsity ? Real(0) : static_cast<Real>(rng.uniform(-1, 1));
  return t;
}

// Scalar objective sum(out * probe) for finite differences through one kernel.
double probe_sum(const Tensor<double>& out, const Tensor<double>& probe) {
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
  return s;
}

double numeric_grad(double& x, const std::function<double()>& f, double eps = 1e-6) {
  const double saved = x;
  x = saved + eps;
  const double up = f();
  x = saved - eps;
  const double down = f();
  x = saved;
  return (up - down) / (2 * eps);
}

}  // namespace

TEST_CASE("conv1d forward examples") {
  SUBCASE("kernel 1 with identity weights copies the input") {
    Rng rng(1);
    const auto in = random_tensor<double>(rng, {5, 3});
    Tensor<double> w({1, 3, 3});
    for (std::size_t c = 0; c < 3; ++c) w.at(0, c, c) = 1.0;
    Tensor<double> out;
    k::conv1d_forward(in, w, Tensor<double>({3}), out);
    CHECK(out == in);
  }
  SUBCASE("kernel 3 with unit weights and zero padding") {
    const Tensor<double> in({3, 1}, {1, 2, 3});
    const Tensor<double> w({3, 1, 1}, 1.0);
    Tensor<double> out;
    k::conv1d_forward(in, w, Tensor<double>({1}), out);
    CHECK(out.values()[0] == 3.0);
    CHECK(out.values()[1] == 6.0);
    CHECK(out.values()[2] == 5.0);
  }
  SUBCASE("zero input gives the broadcast bias") {
    Rng rng(2);
    const auto w = random_tensor<double>(rng, {3, 4, 2});
    const Tensor<double> bias({2}, {0.5, -1.5});
    Tensor<double> out;
    k::conv1d_forward(Tensor<double>({6, 4}), w, bias, out);
    for (std::size_t t = 0; t < 6; ++t) {
      CHECK(out.at(t, 0) == 0.5);
      CHECK(out.at(t, 1) == -1.5);
    }
  }
  SUBCASE("shape errors") {
    Tensor<double> out;
    CHECK_THROWS(k::conv1d_forward(Tensor<double>({4, 3}), Tensor<double>({2, 3, 2}), Tensor<double>({2}), out));
    CHECK_THROWS(k::conv1d_forward(Tensor<double>({4, 3}), Tensor<double>({3, 2, 2}), Tensor<double>({2}), out));
    CHECK_THROWS(k::conv1d_forward(Tensor<double>({4, 3}), Tensor<double>({3, 3, 2}), Tensor<double>({3}), out));
  }
}

TEST_CASE("conv1d backward examples") {
  SUBCASE("zero upstream gives zero gradients") {
    Rng rng(3);
    const auto in = random_tensor<double>(rng, {5, 2});
    const auto w = random_tensor<double>(rng, {3, 2, 3});
    Tensor<double> gi;
    Tensor<double> gw({3, 2, 3});
    Tensor<double> gb({3});
    k::conv1d_backward(in, w, Tensor<double>({5, 3}), &gi, gw, gb);
    for (double v : gi.values()) CHECK(v == 0.0);
    for (double v : gw.values()) CHECK(v == 0.0);
    for (double v : gb.values()) CHECK(v == 0.0);
  }
  SUBCASE("single channel kernel 1 scales the upstream") {
    const Tensor<double> in({3, 1}, {1, 2, 3});
    const Tensor<double> w({1, 1, 1}, {2.5});
    const Tensor<double> up({3, 1}, {1, -2, 4});
    Tensor<double> gi;
    Tensor<double> gw({1, 1, 1});
    Tensor<double> gb({1});
    k::conv1d_backward(in, w, up, &gi, gw, gb);
    CHECK(gi.values()[0] == 2.5);
    CHECK(gi.values()[1] == -5.0);
    CHECK(gi.values()[2] == 10.0);
  }
}

TEST_CASE("kernel backward passes match central differences") {
  Rng rng(11);
  for (int rep = 0; rep < 6; ++rep) {
    const std::size_t T = 1 + rng.index(6);
    const std::size_t cin = 1 + rng.index(4);
    const std::size_t cout = 1 + rng.index(4);
    const std::size_t K = rep % 2 == 0 ? 3 : 1;
    auto in = random_tensor<double>(rng, {T, cin});
    auto w = random_tensor<double>(rng, {K, cin, cout});
    auto b = random_tensor<double>(rng, {cout});
    const auto probe = random_tensor<double>(rng, {T, cout});
    auto f = [&] {
      Tensor<double> out;
      k::conv1d_forward(in, w, b, out);
      return probe_sum(out, probe);
    };
    Tensor<double> gi;
    Tensor<double> gw({K, cin, cout});
    Tensor<double> gb({cout});
    k::conv1d_backward(in, w, probe, &gi, gw, gb);
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(gradient_relative_error(gi[i], numeric_grad(in[i], f)) < 1e-6);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(gradient_relative_error(gw[i], numeric_grad(w[i], f)) < 1e-6);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      CHECK(gradient_relative_error(gb[i], numeric_grad(b[i], f)) < 1e-6);
    }
  }

  SUBCASE("dense") {
    auto in = random_tensor<double>(rng, {4, 5});
    auto w = random_tensor<double>(rng, {5, 3});
    auto b = random_tensor<double>(rng, {3});
    const auto probe = random_tensor<double>(rng, {4, 3});
    auto f = [&] {
      Tensor<double> out;
      k::dense_forward(in, w, b, out);
      return probe_sum(out, probe);
    };
    Tensor<double> gi;
    Tensor<double> gw({5, 3});
    Tensor<double> gb({3});
    k::dense_backward(in, w, probe, &gi, gw, gb);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(gradient_relative_error(gi[i], numeric_grad(in[i], f)) < 1e-6);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(gradient_relative_error(gw[i], numeric_grad(w[i], f)) < 1e-6);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(gradient_relative_error(gb[i], numeric_grad(b[i], f)) < 1e-6);
  }

  SUBCASE("sigmoid and grouped softmax") {
    auto z = random_tensor<double>(rng, {3, 6});
    const auto probe = random_tensor<double>(rng, {3, 6});
    auto f_sig = [&] {
      Tensor<double> p;
      k::sigmoid_forward(z, p);
      return probe_sum(p, probe);
    };
    auto f_soft = [&] {
      Tensor<double> p;
      k::softmax_forward(z, 3, p);
      return probe_sum(p, probe);
    };
    Tensor<double> p;
    Tensor<double> g;
    k::sigmoid_forward(z, p);
    k::sigmoid_backward(p, probe, g);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(gradient_relative_error(g[i], numeric_grad(z[i], f_sig)) < 1e-6);
    k::softmax_forward(z, 3, p);
    k::softmax_backward(p, probe, 3, g);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(gradient_relative_error(g[i], numeric_grad(z[i], f_soft)) < 1e-6);
  }
}

TEST_CASE("parallel kernels agree with the serial references") {
  Rng rng(5);
  for (std::size_t K : {1u, 3u, 5u}) {
    const auto in = random_tensor<float>(rng, {37, 19}, 0.4);  // ReLU-like sparsity
    const auto w = random_tensor<float>(rng, {K, 19, 23});
    const auto b = random_tensor<float>(rng, {23});
    const auto up = random_tensor<float>(rng, {37, 23});
    Tensor<float> out_par;
    Tensor<float> out_ser;
    k::conv1d_forward(in, w, b, out_par);
    k::serial::conv1d_forward(in, w, b, out_ser);
    REQUIRE(out_par.shape() == out_ser.shape());
    for (std::size_t i = 0; i < out_par.size(); ++i) CHECK(out_par[i] == doctest::Approx(out_ser[i]).epsilon(1e-5));

    Tensor<float> gi_par;
    Tensor<float> gi_ser;
    Tensor<float> gw_par({K, 19, 23});
    Tensor<float> gw_ser({K, 19, 23});
    Tensor<float> gb_par({23});
    Tensor<float> gb_ser({23});
    k::conv1d_backward(in, w, up, &gi_par, gw_par, gb_par);
    k::serial::conv1d_backward(in, w, up, &gi_ser, gw_ser, gb_ser);
    for (std::size_t i = 0; i < gi_par.size(); ++i) CHECK(gi_par[i] == doctest::Approx(gi_ser[i]).epsilon(1e-4));
    for (std::size_t i = 0; i < gw_par.size(); ++i) CHECK(gw_par[i] == doctest::Approx(gw_ser[i]).epsilon(1e-4));
    for (std::size_t i = 0; i < gb_par.size(); ++i) CHECK(gb_par[i] == doctest::Approx(gb_ser[i]).epsilon(1e-4));
  }
  const auto in = random_tensor<double>(rng, {29, 17});
  const auto w = random_tensor<double>(rng, {17, 11});
  const auto b = random_tensor<double>(rng, {11});
  Tensor<double> out_par;
  Tensor<double> out_ser;
  k::dense_forward(in, w, b, out_par);
  k::serial::dense_forward(in, w, b, out_ser);
  for (std::size_t i = 0; i < out_par.size(); ++i) CHECK(out_par[i] == doctest::Approx(out_ser[i]).epsilon(1e-12));
}

TEST_CASE("gradients accumulate across backward calls") {
  Rng rng(9);
  const auto in = random_tensor<double>(rng, {4, 3});
  const auto w = random_tensor<double>(rng, {3, 3, 2});
  const auto up = random_tensor<double>(rng, {4, 2});
  Tensor<double> gw1({3, 3, 2});
  Tensor<double> gb1({2});
  Tensor<double> gw2({3, 3, 2});
  Tensor<double> gb2({2});
  k::conv1d_backward<double>(in, w, up, nullptr, gw1, gb1);
  k::conv1d_backward<double>(in, w, up, nullptr, gw2, gb2);
  k::conv1d_backward<double>(in, w, up, nullptr, gw2, gb2);
  for (std::size_t i = 0; i < gw1.size(); ++i) CHECK(gw2[i] == doctest::Approx(2 * gw1[i]));
}

TEST_CASE("kernel-1 convolution equals the dense layer bit for bit") {
  Rng rng(13);
  const auto in = random_tensor<float>(rng, {21, 16}, 0.3);
  const auto w = random_tensor<float>(rng, {16, 9});
  const auto b = random_tensor<float>(rng, {9});
  const Tensor<float> w3({1, 16, 9}, std::vector<float>(w.values().begin(), w.values().end()));
  Tensor<float> conv_out;
  Tensor<float> dense_out;
  k::conv1d_forward(in, w3, b, conv_out);
  k::dense_forward(in, w, b, dense_out);
  CHECK(conv_out.values().size() == dense_out.values().size());
  CHECK(std::equal(conv_out.values().begin(), conv_out.values().end(), dense_out.values().begin()));
}

TEST_CASE("activations") {
  Tensor<double> out;
  k::relu_forward(Tensor<double>({3}, {-1, 0, 2}), out);
  CHECK(out == Tensor<double>({3}, {0, 0, 2}));

  const auto uniform = k::softmax(std::vector<double>{2, 2, 2, 2});
  for (double p : uniform) CHECK(p == doctest::Approx(0.25));
  const auto two = k::softmax(std::vector<double>{0, std::log(3.0)});
  CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(0.75).epsilon(1e-12));
  const auto big = k::softmax(std::vector<double>{1000, 1000});
  CHECK(big[0] == doctest::Approx(0.5));

  k::sigmoid_forward(Tensor<double>({3}, {-800, 0, 800}), out);
  CHECK(out.all_finite());
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == 0.5);
  CHECK(out[2] == doctest::Approx(1.0));
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves the parameter in place") {
    Parameter<double> p("p", {3});
    p.value.fill(1.5);
    std::vector<Parameter<double>*> ps{&p};
    AdamState<double> adam(ps);
    adam.update(ps);
    for (double v : p.value.values()) CHECK(v == 1.5);
  }
  SUBCASE("first step moves by the learning rate") {
    Parameter<double> p("p", {1});
    p.value[0] = 0.3;
    p.grad[0] = 1.0;
    std::vector<Parameter<double>*> ps{&p};
    AdamState<double> adam(ps);
    adam.update(ps);
    CHECK(p.value[0] == doctest::Approx(0.3 - 0.001 / (1 + 1e-8)).epsilon(1e-12));
    CHECK(p.grad[0] == 0.0);
    CHECK(adam.step() == 1);
  }
  SUBCASE("steps decrease a convex quadratic") {
    Parameter<double> p("p", {1});
    p.value[0] = 2.0;
    std::vector<Parameter<double>*> ps{&p};
    AdamState<double> adam(ps, AdamConfig{0.1});
    double loss = p.value[0] * p.value[0];
    for (int i = 0; i < 2; ++i) {
      p.grad[0] = 2 * p.value[0];
      adam.update(ps);
      const double next = p.value[0] * p.value[0];
      CHECK(next < loss);
      loss = next;
    }
  }
}

TEST_CASE("gradient_check on a linear model with squared error") {
  Rng rng(17);
  Parameter<double> w("w", {4, 2});
  Parameter<double> b("b", {2});
  for (auto& v : w.value.values()) v = rng.uniform(-1, 1);
  const auto x = random_tensor<double>(rng, {5, 4});
  const auto y = random_tensor<double>(rng, {5, 2});
  auto residual = [&] {
    Tensor<double> out;
    k::dense_forward(x, w.value, b.value, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
    return out;
  };
  auto loss = [&] {
    const auto r = residual();
    double s = 0;
    for (double v : r.values()) s += v * v;
    return s;
  };
  auto grads = [&] {
    auto r = residual();
    for (auto& v : r.values()) v *= 2;
    k::dense_backward<double>(x, w.value, r, nullptr, w.grad, b.grad);
  };
  std::vector<Parameter<double>*> ps{&w, &b};
  const auto result = gradient_check(ps, loss, grads);
  CHECK(result.entries_checked == 10);
  CHECK(result.max_relative_error < 1e-8);

  auto doubled = [&] {
    grads();
    for (auto& v : w.grad.values()) v *= 2;
  };
  CHECK(gradient_check(ps, loss, doubled).max_relative_error > 0.3);
}

TEST_CASE("gradient_check reports a non-finite loss") {
  Parameter<double> p("p", {1});
  std::vector<Parameter<double>*> ps{&p};
  CHECK_THROWS_AS(gradient_check(ps, [] { return std::nan(""); }, [] {}), std::runtime_error);
}
