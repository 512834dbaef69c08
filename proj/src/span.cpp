#include "scopeloc/span.hpp"

#include <algorithm>
#include <array>

namespace scopeloc {

namespace {

constexpr std::array<std::string_view, kNumAssertionClasses + 1> kClassNames = {
    "None", "Present", "Absent", "Conditional", "Hypothetical", "Possibility", "AWSE"};

}  // namespace

std::string_view class_name(AssertionClass c) { return class_name(class_index(c)); }

std::string_view class_name(int id) {
  if (id < 0 || id > kNumAssertionClasses) throw std::out_of_range("class id out of range");
  return kClassNames[static_cast<std::size_t>(id)];
}

std::optional<AssertionClass> class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<AssertionClass>(i);
  }
  return std::nullopt;
}

double span_iou(const TokenSpan& a, const TokenSpan& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  if (hi < lo) return 0.0;
  const std::size_t inter = hi - lo + 1;
  const std::size_t uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

PriorLattice::PriorLattice(std::size_t tokens, std::size_t max_length)
    : tokens_(tokens), max_length_(max_length) {
  if (tokens == 0) throw std::invalid_argument("prior lattice needs at least one token");
  if (max_length == 0) throw std::invalid_argument("prior lattice needs max_length >= 1");
  priors_.reserve(tokens * max_length);
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t len = 1; len <= max_length; ++len) {
      const std::size_t end = std::min(t + len - 1, tokens - 1);
      priors_.push_back(PriorBox{t, len, TokenSpan(t, end)});
    }
  }
}

const PriorBox& PriorLattice::at(std::size_t anchor, std::size_t length) const {
  if (anchor >= tokens_ || length == 0 || length > max_length_) {
    throw std::out_of_range("prior (anchor, length) outside lattice");
  }
  return priors_[index(anchor, length)];
}

PriorLattice build_prior_lattice(std::size_t tokens, std::size_t max_length) {
  return PriorLattice(tokens, max_length);
}

std::size_t TargetGrid::positive_count() const {
  return static_cast<std::size_t>(std::count(positive.begin(), positive.end(), 1));
}

TargetGrid assign_targets(const PriorLattice& priors, const std::vector<LabeledSpan>& gold,
                          double match_threshold) {
  for (const auto& g : gold) {
    if (g.span.end >= priors.tokens()) {
      throw std::out_of_range("gold span [" + std::to_string(g.span.start) + "," +
                              std::to_string(g.span.end) + "] outside sequence of " +
                              std::to_string(priors.tokens()) + " tokens");
    }
    if (g.class_id == AssertionClass::None) {
      throw std::invalid_argument("gold span labeled with the None class");
    }
  }

  TargetGrid grid;
  grid.tokens = priors.tokens();
  grid.priors = priors.max_length();
  grid.iou_target.assign(priors.size(), 0.0);
  grid.positive.assign(priors.size(), 0);
  grid.class_target.assign(priors.size(), AssertionClass::None);

  for (std::size_t i = 0; i < priors.size(); ++i) {
    const TokenSpan& box = priors[i].effective_span;
    double best = 0.0;
    const LabeledSpan* match = nullptr;
    for (const auto& g : gold) {
      const double iou = span_iou(box, g.span);
      if (iou <= 0.0) continue;
      const bool better =
          match == nullptr || iou > best ||
          (iou == best && (g.span.start < match->span.start ||
                           (g.span.start == match->span.start && g.class_id < match->class_id)));
      if (better) {
        best = iou;
        match = &g;
      }
    }
    grid.iou_target[i] = best;
    if (match != nullptr && best >= match_threshold) {
      grid.positive[i] = 1;
      grid.class_target[i] = match->class_id;
    }
  }
  return grid;
}

}  // namespace scopeloc
