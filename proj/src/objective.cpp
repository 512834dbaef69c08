#include "scopeloc/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scopeloc {

bool ClassWeights::empty() const {
  return std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; });
}

namespace {

void check_grid(std::size_t box_size, const TargetGrid& target) {
  if (box_size != target.size()) {
    throw std::invalid_argument("prediction grid has " + std::to_string(box_size) +
                                " priors, target grid has " + std::to_string(target.size()));
  }
}

std::size_t target_class(const TargetGrid& target, std::size_t cell, std::size_t class_count) {
  const auto c = static_cast<std::size_t>(class_index(target.class_target[cell]));
  if (c == 0 || c > class_count) {
    throw std::invalid_argument("positive prior with class id " + std::to_string(c) +
                                " outside 1.." + std::to_string(class_count));
  }
  return c;
}

}  // namespace

double box_loss(std::span<const double> box_conf, const TargetGrid& target) {
  check_grid(box_conf.size(), target);
  double sum = 0.0;
  for (std::size_t i = 0; i < box_conf.size(); ++i) {
    const double d = box_conf[i] - target.iou_target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(box_conf.size());
}

ClassWeights class_weights(std::span<const TargetGrid* const> batch, std::size_t class_count,
                           ClassWeighting scheme) {
  std::vector<double> counts(class_count + 1, 0.0);
  double total = 0.0;
  for (const TargetGrid* grid : batch) {
    for (std::size_t i = 0; i < grid->size(); ++i) {
      if (!grid->positive[i]) continue;
      counts[target_class(*grid, i, class_count)] += 1.0;
      total += 1.0;
    }
  }
  ClassWeights weights{std::vector<double>(class_count + 1, 0.0)};
  if (total == 0.0) return weights;
  const double present = static_cast<double>(
      std::count_if(counts.begin() + 1, counts.end(), [](double n) { return n > 0.0; }));
  for (std::size_t c = 1; c <= class_count; ++c) {
    if (counts[c] == 0.0) continue;
    weights.w[c] = scheme == ClassWeighting::InverseFrequency ? total / (present * counts[c])
                                                              : counts[c] / total;
  }
  return weights;
}

double class_loss(std::span<const double> class_prob, std::size_t class_count,
                  const TargetGrid& target, const ClassWeights& weights) {
  if (class_count == 0 || class_prob.size() != target.size() * class_count) {
    throw std::invalid_argument("class grid size does not match target grid x class count");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target.positive[i]) continue;
    const std::size_t c = target_class(target, i, class_count);
    const double p = class_prob[i * class_count + (c - 1)];
    sum += -weights[target.class_target[i]] * std::log(std::max(p, kLogClamp));
  }
  return sum / static_cast<double>(target.size());
}

LossBreakdown total_loss(const PredictionGrids& grids, const TargetGrid& target,
                         const ClassWeights& weights) {
  LossBreakdown out;
  out.box_loss = box_loss(grids.box_conf, target);
  out.class_loss = class_loss(grids.class_prob, grids.classes, target, weights);
  out.total = out.box_loss + out.class_loss;
  return out;
}

GridGradients loss_gradients(const PredictionGrids& grids, const TargetGrid& target,
                             const ClassWeights& weights, double scale) {
  check_grid(grids.box_conf.size(), target);
  const double cells = static_cast<double>(target.size());
  GridGradients g;
  g.box_conf.resize(grids.box_conf.size());
  for (std::size_t i = 0; i < grids.box_conf.size(); ++i) {
    g.box_conf[i] = scale * 2.0 * (grids.box_conf[i] - target.iou_target[i]) / cells;
  }
  g.class_prob.assign(grids.class_prob.size(), 0.0);
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target.positive[i]) continue;
    const std::size_t c = target_class(target, i, grids.classes);
    const std::size_t k = i * grids.classes + (c - 1);
    const double p = grids.class_prob[k];
    if (p <= kLogClamp) continue;  // clamped region has zero slope
    g.class_prob[k] = -scale * weights[target.class_target[i]] / (p * cells);
  }
  return g;
}

}  // namespace scopeloc
