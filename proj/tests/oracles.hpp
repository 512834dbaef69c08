#pragma once

// Independent reference implementations. None of these call into the code they check.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <set>
#include <vector>

#include "scopeloc/span.hpp"

namespace oracle {

inline std::set<std::size_t> token_set(const scopeloc::TokenSpan& s) {
  std::set<std::size_t> out;
  for (std::size_t t = s.start; t <= s.end; ++t) out.insert(t);
  return out;
}

/// |A intersect B| / |A union B| over explicit token sets.
inline double iou(const scopeloc::TokenSpan& a, const scopeloc::TokenSpan& b) {
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  std::vector<std::size_t> inter;
  std::vector<std::size_t> uni;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

/// Clipped span of every (anchor, length) prior, enumerated directly.
inline std::vector<scopeloc::TokenSpan> prior_spans(std::size_t tokens, std::size_t max_length) {
  std::vector<scopeloc::TokenSpan> out;
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t len = 1; len <= max_length; ++len) {
      out.emplace_back(t, std::min(t + len - 1, tokens - 1));
    }
  }
  return out;
}

/// Greedy suppression: explicit stable sort, then a pairwise scan that keeps a
/// candidate only when it shares no token with any kept one.
inline std::vector<std::size_t> nms(const std::vector<double>& scores,
                                    const std::vector<scopeloc::TokenSpan>& spans, double gamma) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Insertion sort: descending score, ascending index on ties.
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      const std::size_t a = order[j - 1];
      const std::size_t b = order[j];
      if (scores[b] > scores[a]) {
        std::swap(order[j - 1], order[j]);
      } else {
        break;
      }
    }
  }
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (!(scores[idx] > gamma)) break;
    bool clear = true;
    for (std::size_t k : kept) {
      if (iou(spans[idx], spans[k]) != 0.0) {
        clear = false;
        break;
      }
    }
    if (clear) kept.push_back(idx);
  }
  return kept;
}

}  // namespace oracle
