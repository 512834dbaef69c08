#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scopeloc {

/// Assertion class ids. 0 is the background class, 1..6 are the assertion labels.
enum class AssertionClass : std::uint8_t {
  None = 0,
  Present = 1,
  Absent = 2,
  Conditional = 3,
  Hypothetical = 4,
  Possibility = 5,
  AWSE = 6,
};

inline constexpr int kNumAssertionClasses = 6;  // excluding None

std::string_view class_name(AssertionClass c);
std::string_view class_name(int id);
/// Case-sensitive lookup of a canonical name; nullopt for anything else.
std::optional<AssertionClass> class_from_name(std::string_view name);

inline int class_index(AssertionClass c) { return static_cast<int>(c); }

/// Inclusive token interval [start, end].
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  TokenSpan() = default;
  TokenSpan(std::size_t s, std::size_t e) : start(s), end(e) {
    if (e < s) throw std::invalid_argument("TokenSpan end precedes start");
  }

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t token) const { return start <= token && token <= end; }
  bool overlaps(const TokenSpan& o) const { return start <= o.end && o.start <= end; }

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct LabeledSpan {
  TokenSpan span;
  AssertionClass class_id = AssertionClass::Present;

  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

/// Number of shared tokens divided by the size of the token union.
double span_iou(const TokenSpan& a, const TokenSpan& b);

struct PriorBox {
  std::size_t anchor = 0;
  std::size_t nominal_length = 1;
  TokenSpan effective_span;
};

/// Row-major (anchor-major, length-minor) prior lattice; index = anchor * A + (length - 1).
class PriorLattice {
 public:
  PriorLattice(std::size_t tokens, std::size_t max_length);

  std::size_t tokens() const { return tokens_; }
  std::size_t max_length() const { return max_length_; }
  std::size_t size() const { return priors_.size(); }
  const PriorBox& operator[](std::size_t i) const { return priors_[i]; }
  const PriorBox& at(std::size_t anchor, std::size_t length) const;
  std::size_t index(std::size_t anchor, std::size_t length) const {
    return anchor * max_length_ + (length - 1);
  }

  auto begin() const { return priors_.begin(); }
  auto end() const { return priors_.end(); }

 private:
  std::size_t tokens_;
  std::size_t max_length_;
  std::vector<PriorBox> priors_;
};

PriorLattice build_prior_lattice(std::size_t tokens, std::size_t max_length);

/// Training targets over the prior lattice, flattened in lattice order.
struct TargetGrid {
  std::size_t tokens = 0;
  std::size_t priors = 0;
  std::vector<double> iou_target;
  std::vector<std::uint8_t> positive;
  std::vector<AssertionClass> class_target;

  std::size_t size() const { return iou_target.size(); }
  std::size_t positive_count() const;
};

inline constexpr double kDefaultMatchThreshold = 0.5;

/// Each prior is matched to its highest-IoU gold span (ties: earliest start, then
/// smallest class id) and is positive when that IoU reaches match_threshold.
TargetGrid assign_targets(const PriorLattice& priors, const std::vector<LabeledSpan>& gold,
                          double match_threshold = kDefaultMatchThreshold);

}  // namespace scopeloc
