#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scopeloc/model.hpp"
#include "scopeloc/span.hpp"

namespace scopeloc {

enum class ClassWeighting {
  InverseFrequency,  // w_c = N_pos / (C_present * N_pos_c)
  Fraction,          // w_c = N_pos_c / N_pos
};

/// Indexed by class id; entry 0 (None) is always 0.
struct ClassWeights {
  std::vector<double> w;

  double operator[](AssertionClass c) const {
    const auto i = static_cast<std::size_t>(class_index(c));
    return i < w.size() ? w[i] : 0.0;
  }
  bool empty() const;
};

struct LossBreakdown {
  double box_loss = 0.0;
  double class_loss = 0.0;
  double total = 0.0;
};

inline constexpr double kLogClamp = 1e-12;

/// Mean squared error between box confidences and IoU targets over all T x A priors.
double box_loss(std::span<const double> box_conf, const TargetGrid& target);

/// Weights from the positive priors of a batch. Classes with no positives get 0.
ClassWeights class_weights(std::span<const TargetGrid* const> batch, std::size_t class_count,
                           ClassWeighting scheme = ClassWeighting::InverseFrequency);

/// Weighted cross-entropy of the matched class over positive priors, divided by T x A.
double class_loss(std::span<const double> class_prob, std::size_t class_count,
                  const TargetGrid& target, const ClassWeights& weights);

LossBreakdown total_loss(const PredictionGrids& grids, const TargetGrid& target,
                         const ClassWeights& weights);

/// Gradient of scale * total_loss with respect to the prediction grids.
GridGradients loss_gradients(const PredictionGrids& grids, const TargetGrid& target,
                             const ClassWeights& weights, double scale = 1.0);

}  // namespace scopeloc
