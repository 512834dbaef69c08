#include <doctest.h>

#include <cmath>

#include "scopeloc/objective.hpp"
#include "scopeloc/rng.hpp"

using namespace scopeloc;

namespace {

TargetGrid grid_with(std::size_t T, std::size_t A, const std::vector<LabeledSpan>& gold,
                     double threshold = kDefaultMatchThreshold) {
  return assign_targets(PriorLattice(T, A), gold, threshold);
}

PredictionGrids random_grids(Rng& rng, std::size_t T, std::size_t A, std::size_t C) {
  PredictionGrids g{T, A, C, std::vector<double>(T * A), std::vector<double>(T * A * C)};
  for (auto& v : g.box_conf) v = rng.uniform();
  for (std::size_t cell = 0; cell < T * A; ++cell) {
    double sum = 0;
    for (std::size_t c = 0; c < C; ++c) sum += g.class_prob[cell * C + c] = rng.uniform(0.05, 1.0);
    for (std::size_t c = 0; c < C; ++c) g.class_prob[cell * C + c] /= sum;
  }
  return g;
}

}  // namespace

TEST_CASE("box loss") {
  const TargetGrid t = grid_with(3, 2, {{TokenSpan(0, 1), AssertionClass::Present}});
  CHECK(box_loss(t.iou_target, t) == 0.0);

  const TargetGrid empty = grid_with(3, 2, {});
  CHECK(box_loss(std::vector<double>(6, 1.0), empty) == 1.0);

  Rng rng(2);
  const TargetGrid r = grid_with(3, 2, {{TokenSpan(1, 2), AssertionClass::Absent}});
  std::vector<double> p(6);
  for (auto& v : p) v = rng.uniform();
  double oracle = 0;
  for (std::size_t i = 0; i < 6; ++i) oracle += (p[i] - r.iou_target[i]) * (p[i] - r.iou_target[i]);
  oracle /= 6;
  CHECK(std::abs(box_loss(p, r) - oracle) < 1e-12);
  CHECK(box_loss(p, r) >= 0.0);
  CHECK(box_loss(p, r) <= 1.0);
  CHECK_THROWS(box_loss(std::vector<double>(5, 0.0), r));
}

TEST_CASE("class weights") {
  // Four single-token positives: three Present, one Absent (A = 1 so each gold span has one prior).
  const TargetGrid t = grid_with(6, 1,
                                 {{TokenSpan(0, 0), AssertionClass::Present},
                                  {TokenSpan(1, 1), AssertionClass::Present},
                                  {TokenSpan(2, 2), AssertionClass::Present},
                                  {TokenSpan(4, 4), AssertionClass::Absent}});
  const TargetGrid* batch[] = {&t};
  const ClassWeights w = class_weights(batch, 6);
  CHECK(w[AssertionClass::Present] == doctest::Approx(4.0 / 6.0));
  CHECK(w[AssertionClass::Absent] == doctest::Approx(2.0));
  CHECK(w[AssertionClass::Possibility] == 0.0);
  CHECK(w[AssertionClass::None] == 0.0);

  const ClassWeights f = class_weights(batch, 6, ClassWeighting::Fraction);
  CHECK(f[AssertionClass::Present] == doctest::Approx(0.75));
  CHECK(f[AssertionClass::Absent] == doctest::Approx(0.25));

  const TargetGrid single = grid_with(4, 1, {{TokenSpan(1, 1), AssertionClass::AWSE}});
  const TargetGrid* one[] = {&single};
  CHECK(class_weights(one, 6)[AssertionClass::AWSE] == 1.0);

  const TargetGrid even = grid_with(6, 1,
                                    {{TokenSpan(0, 0), AssertionClass::Present},
                                     {TokenSpan(2, 2), AssertionClass::Absent},
                                     {TokenSpan(4, 4), AssertionClass::Conditional}});
  const TargetGrid* eq[] = {&even};
  const ClassWeights we = class_weights(eq, 6);
  CHECK(we[AssertionClass::Present] == 1.0);
  CHECK(we[AssertionClass::Absent] == 1.0);
  CHECK(we[AssertionClass::Conditional] == 1.0);

  const TargetGrid none = grid_with(4, 2, {});
  const TargetGrid* nothing[] = {&none};
  CHECK(class_weights(nothing, 6).empty());
}

TEST_CASE("class loss") {
  const ClassWeights unit{{0, 1, 1}};
  SUBCASE("no positive priors") {
    const TargetGrid t = grid_with(2, 2, {});
    CHECK(class_loss(std::vector<double>(8, 0.5), 2, t, unit) == 0.0);
  }
  SUBCASE("perfect one-hot prediction") {
    const TargetGrid t = grid_with(2, 2, {{TokenSpan(0, 1), AssertionClass::Absent}}, 1.0);
    REQUIRE(t.positive_count() == 1);
    std::vector<double> p(8, 0.0);
    for (std::size_t cell = 0; cell < 4; ++cell) p[cell * 2 + 1] = 1.0;
    CHECK(class_loss(p, 2, t, unit) == 0.0);
  }
  SUBCASE("uniform prediction over two classes on a 2x2 grid") {
    const TargetGrid t = grid_with(2, 2, {{TokenSpan(0, 1), AssertionClass::Present}}, 1.0);
    REQUIRE(t.positive_count() == 1);
    CHECK(class_loss(std::vector<double>(8, 0.5), 2, t, unit) == doctest::Approx(std::log(2.0) / 4.0));
    CHECK(std::log(2.0) / 4.0 == doctest::Approx(0.1733).epsilon(1e-3));
  }
  SUBCASE("zero probability is clamped") {
    const TargetGrid t = grid_with(2, 2, {{TokenSpan(0, 1), AssertionClass::Present}}, 1.0);
    const double v = class_loss(std::vector<double>(8, 0.0), 2, t, unit);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(-std::log(kLogClamp) / 4.0));
  }
  SUBCASE("a positive class outside the head is rejected") {
    const TargetGrid t = grid_with(2, 2, {{TokenSpan(0, 1), AssertionClass::AWSE}});
    CHECK_THROWS(class_loss(std::vector<double>(8, 0.5), 2, t, unit));
  }
}

TEST_CASE("class loss ignores non-positive priors exactly") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const TargetGrid t = grid_with(8, 3,
                                   {{TokenSpan(1, 2), AssertionClass::Absent},
                                    {TokenSpan(5, 5), AssertionClass::Present}});
    PredictionGrids g = random_grids(rng, 8, 3, 3);
    const ClassWeights w = [&] {
      const TargetGrid* b[] = {&t};
      return class_weights(b, 3);
    }();
    const double before = class_loss(g.class_prob, 3, t, w);
    for (std::size_t cell = 0; cell < t.size(); ++cell) {
      if (t.positive[cell]) continue;
      for (std::size_t c = 0; c < 3; ++c) g.class_prob[cell * 3 + c] = rng.uniform();
    }
    CHECK(class_loss(g.class_prob, 3, t, w) == before);
  }
}

TEST_CASE("total loss is the exact sum of its parts") {
  Rng rng(41);
  const TargetGrid t = grid_with(6, 3,
                                 {{TokenSpan(0, 1), AssertionClass::Conditional},
                                  {TokenSpan(3, 5), AssertionClass::Absent}});
  const TargetGrid* b[] = {&t};
  const ClassWeights w = class_weights(b, 3);
  for (int rep = 0; rep < 20; ++rep) {
    const PredictionGrids g = random_grids(rng, 6, 3, 3);
    const LossBreakdown l = total_loss(g, t, w);
    CHECK(l.box_loss == box_loss(g.box_conf, t));
    CHECK(l.class_loss == class_loss(g.class_prob, 3, t, w));
    CHECK(l.total == l.box_loss + l.class_loss);

    double box_oracle = 0;
    double class_oracle = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      box_oracle += (g.box_conf[i] - t.iou_target[i]) * (g.box_conf[i] - t.iou_target[i]);
      if (t.positive[i]) {
        const auto c = static_cast<std::size_t>(class_index(t.class_target[i]));
        class_oracle -= w[t.class_target[i]] * std::log(g.class_prob[i * 3 + c - 1]);
      }
    }
    CHECK(l.box_loss == doctest::Approx(box_oracle / 18).epsilon(1e-12));
    CHECK(l.class_loss == doctest::Approx(class_oracle / 18).epsilon(1e-12));
  }

  PredictionGrids perfect{6, 3, 3, t.iou_target, std::vector<double>(54, 0.0)};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto c = t.positive[i] ? static_cast<std::size_t>(class_index(t.class_target[i])) : 1;
    perfect.class_prob[i * 3 + c - 1] = 1.0;
  }
  CHECK(total_loss(perfect, t, w).total == 0.0);
}

TEST_CASE("loss gradients match finite differences of the loss") {
  Rng rng(43);
  const TargetGrid t = grid_with(5, 2,
                                 {{TokenSpan(0, 1), AssertionClass::Present},
                                  {TokenSpan(3, 3), AssertionClass::Conditional}});
  const TargetGrid* b[] = {&t};
  const ClassWeights w = class_weights(b, 3);
  PredictionGrids g = random_grids(rng, 5, 2, 3);
  const GridGradients grad = loss_gradients(g, t, w, 0.5);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < g.box_conf.size(); ++i) {
    const double saved = g.box_conf[i];
    g.box_conf[i] = saved + eps;
    const double up = total_loss(g, t, w).total;
    g.box_conf[i] = saved - eps;
    const double down = total_loss(g, t, w).total;
    g.box_conf[i] = saved;
    CHECK(grad.box_conf[i] == doctest::Approx(0.5 * (up - down) / (2 * eps)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < g.class_prob.size(); ++i) {
    const double saved = g.class_prob[i];
    g.class_prob[i] = saved + eps;
    const double up = total_loss(g, t, w).total;
    g.class_prob[i] = saved - eps;
    const double down = total_loss(g, t, w).total;
    g.class_prob[i] = saved;
    CHECK(grad.class_prob[i] == doctest::Approx(0.5 * (up - down) / (2 * eps)).epsilon(1e-6));
  }
}
