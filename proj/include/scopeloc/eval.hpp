#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scopeloc/data.hpp"
#include "scopeloc/span.hpp"

namespace scopeloc {

inline constexpr std::size_t kReportClasses = kNumAssertionClasses + 1;  // None + 6

struct ClassScore {
  std::size_t true_pos = 0;
  std::size_t false_pos = 0;
  std::size_t false_neg = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  void finalize();
};

struct SpanMatchScore {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Token-level scores for None and the six assertion classes (indexed by class id).
struct EvalReport {
  std::array<ClassScore, kReportClasses> per_class{};
  double macro_f1 = 0.0;
  std::size_t tokens = 0;
  /// Exact (start, end, class) span matches; supplementary to the token scores.
  SpanMatchScore span_exact;
};

/// Unweighted mean.
double macro_average(std::span<const double> f1_values);

/// Token-level precision/recall/F1 per class over all documents; macro over all 7 classes.
EvalReport token_prf(const std::vector<std::vector<int>>& predicted,
                     const std::vector<std::vector<int>>& gold);
EvalReport token_prf(std::span<const int> predicted, std::span<const int> gold);

SpanMatchScore span_exact_match(const std::vector<std::vector<LabeledSpan>>& predicted,
                                const std::vector<std::vector<LabeledSpan>>& gold);

void write_report_table(std::ostream& out, const EvalReport& report);
void write_report_tsv(std::ostream& out, const EvalReport& report);

struct IouBucket {
  std::size_t count = 0;
  double iou_sum = 0.0;
  double mean() const { return count == 0 ? 0.0 : iou_sum / static_cast<double>(count); }
};

/// (class id, gold length) -> mean over gold spans of the best IoU with a
/// same-class predicted span in the same document.
using IouByLength = std::map<std::pair<int, std::size_t>, IouBucket>;

IouByLength iou_by_scope_length(const std::vector<std::vector<LabeledSpan>>& predicted,
                                const std::vector<std::vector<LabeledSpan>>& gold);
void write_iou_by_length_tsv(std::ostream& out, const IouByLength& table);

/// class id -> (length -> count)
using ScopeHistogram = std::map<int, std::map<std::size_t, std::size_t>>;

ScopeHistogram scope_length_histogram(const std::vector<Document>& corpus);

struct LengthStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

std::map<int, LengthStats> scope_length_stats(const ScopeHistogram& histogram);
/// "mean ± std" with two decimals.
std::string format_mean_std(const LengthStats& stats);

void write_histogram_tsv(std::ostream& out, const std::map<std::string, ScopeHistogram>& by_split);
void write_length_stats_tsv(std::ostream& out, const std::map<std::string, ScopeHistogram>& by_split);

}  // namespace scopeloc
