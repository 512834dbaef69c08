#include "scopeloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace scopeloc {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

void tally(std::span<const int> predicted, std::span<const int> gold, EvalReport& report) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("label sequences differ in length: " +
                                std::to_string(predicted.size()) + " vs " +
                                std::to_string(gold.size()));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int p = predicted[i];
    const int g = gold[i];
    if (p < 0 || p >= static_cast<int>(kReportClasses) || g < 0 ||
        g >= static_cast<int>(kReportClasses)) {
      throw std::invalid_argument("label outside 0..6");
    }
    if (p == g) {
      ++report.per_class[static_cast<std::size_t>(p)].true_pos;
    } else {
      ++report.per_class[static_cast<std::size_t>(p)].false_pos;
      ++report.per_class[static_cast<std::size_t>(g)].false_neg;
    }
  }
  report.tokens += gold.size();
}

void finish(EvalReport& report) {
  std::array<double, kReportClasses> f1{};
  for (std::size_t c = 0; c < kReportClasses; ++c) {
    report.per_class[c].finalize();
    f1[c] = report.per_class[c].f1;
  }
  report.macro_f1 = macro_average(f1);
}

}  // namespace

void ClassScore::finalize() {
  precision = ratio(true_pos, true_pos + false_pos);
  recall = ratio(true_pos, true_pos + false_neg);
  f1 = harmonic(precision, recall);
}

double macro_average(std::span<const double> f1_values) {
  if (f1_values.empty()) return 0.0;
  return std::accumulate(f1_values.begin(), f1_values.end(), 0.0) /
         static_cast<double>(f1_values.size());
}

EvalReport token_prf(const std::vector<std::vector<int>>& predicted,
                     const std::vector<std::vector<int>>& gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("predicted and gold cover different numbers of documents");
  }
  EvalReport report;
  for (std::size_t d = 0; d < gold.size(); ++d) tally(predicted[d], gold[d], report);
  finish(report);
  return report;
}

EvalReport token_prf(std::span<const int> predicted, std::span<const int> gold) {
  EvalReport report;
  tally(predicted, gold, report);
  finish(report);
  return report;
}

SpanMatchScore span_exact_match(const std::vector<std::vector<LabeledSpan>>& predicted,
                                const std::vector<std::vector<LabeledSpan>>& gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("predicted and gold cover different numbers of documents");
  }
  SpanMatchScore s;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    s.predicted += predicted[d].size();
    s.gold += gold[d].size();
    std::vector<bool> used(gold[d].size(), false);
    for (const auto& p : predicted[d]) {
      for (std::size_t g = 0; g < gold[d].size(); ++g) {
        if (!used[g] && gold[d][g] == p) {
          used[g] = true;
          ++s.matched;
          break;
        }
      }
    }
  }
  s.precision = ratio(s.matched, s.predicted);
  s.recall = ratio(s.matched, s.gold);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %9s %9s %9s\n", "class", "tp", "fp", "fn",
                "precision", "recall", "f1");
  out << line;
  for (std::size_t c = 0; c < kReportClasses; ++c) {
    const auto& s = report.per_class[c];
    std::snprintf(line, sizeof line, "%-14s %8zu %8zu %8zu %9.4f %9.4f %9.4f\n",
                  std::string(class_name(static_cast<int>(c))).c_str(), s.true_pos, s.false_pos,
                  s.false_neg, s.precision, s.recall, s.f1);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %9s %9s %9.4f\n", "macro", "", "", "", "", "",
                report.macro_f1);
  out << line;
  const auto& x = report.span_exact;
  std::snprintf(line, sizeof line, "%-14s %8zu %8zu %8zu %9.4f %9.4f %9.4f\n", "span-exact",
                x.matched, x.predicted - x.matched, x.gold - x.matched, x.precision, x.recall, x.f1);
  out << line;
  out << "tokens: " << report.tokens << '\n';
}

void write_report_tsv(std::ostream& out, const EvalReport& report) {
  out << "class\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  char line[160];
  for (std::size_t c = 0; c < kReportClasses; ++c) {
    const auto& s = report.per_class[c];
    std::snprintf(line, sizeof line, "%s\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\n",
                  std::string(class_name(static_cast<int>(c))).c_str(), s.true_pos, s.false_pos,
                  s.false_neg, s.precision, s.recall, s.f1);
    out << line;
  }
  std::snprintf(line, sizeof line, "macro\t\t\t\t\t\t%.6f\n", report.macro_f1);
  out << line;
  const auto& x = report.span_exact;
  std::snprintf(line, sizeof line, "span_exact\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\n", x.matched,
                x.predicted - x.matched, x.gold - x.matched, x.precision, x.recall, x.f1);
  out << line;
}

IouByLength iou_by_scope_length(const std::vector<std::vector<LabeledSpan>>& predicted,
                                const std::vector<std::vector<LabeledSpan>>& gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("predicted and gold cover different numbers of documents");
  }
  IouByLength table;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    for (const auto& g : gold[d]) {
      double best = 0.0;
      for (const auto& p : predicted[d]) {
        if (p.class_id == g.class_id) best = std::max(best, span_iou(p.span, g.span));
      }
      auto& bucket = table[{class_index(g.class_id), g.span.length()}];
      ++bucket.count;
      bucket.iou_sum += best;
    }
  }
  return table;
}

void write_iou_by_length_tsv(std::ostream& out, const IouByLength& table) {
  out << "class\tlength\tcount\tmean_iou\n";
  char line[96];
  for (const auto& [key, bucket] : table) {
    std::snprintf(line, sizeof line, "%s\t%zu\t%zu\t%.6f\n",
                  std::string(class_name(key.first)).c_str(), key.second, bucket.count,
                  bucket.mean());
    out << line;
  }
}

ScopeHistogram scope_length_histogram(const std::vector<Document>& corpus) {
  ScopeHistogram hist;
  for (const auto& doc : corpus) {
    for (const auto& g : doc.gold) ++hist[class_index(g.class_id)][g.span.length()];
  }
  return hist;
}

std::map<int, LengthStats> scope_length_stats(const ScopeHistogram& histogram) {
  std::map<int, LengthStats> out;
  for (const auto& [cls, lengths] : histogram) {
    LengthStats s;
    double sum = 0.0;
    for (const auto& [len, n] : lengths) {
      s.count += n;
      sum += static_cast<double>(len * n);
    }
    if (s.count == 0) continue;
    s.mean = sum / static_cast<double>(s.count);
    double sq = 0.0;
    for (const auto& [len, n] : lengths) {
      const double d = static_cast<double>(len) - s.mean;
      sq += d * d * static_cast<double>(n);
    }
    s.stddev = std::sqrt(sq / static_cast<double>(s.count));
    out[cls] = s;
  }
  return out;
}

std::string format_mean_std(const LengthStats& stats) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f", stats.mean, stats.stddev);
  return buf;
}

void write_histogram_tsv(std::ostream& out, const std::map<std::string, ScopeHistogram>& by_split) {
  out << "split\tclass\tlength\tcount\n";
  for (const auto& [split, hist] : by_split) {
    for (const auto& [cls, lengths] : hist) {
      for (const auto& [len, n] : lengths) {
        out << split << '\t' << class_name(cls) << '\t' << len << '\t' << n << '\n';
      }
    }
  }
}

void write_length_stats_tsv(std::ostream& out,
                            const std::map<std::string, ScopeHistogram>& by_split) {
  out << "split\tclass_id\tclass\tcount\tmean\tstd\tformatted\n";
  char line[160];
  for (const auto& [split, hist] : by_split) {
    for (const auto& [cls, s] : scope_length_stats(hist)) {
      std::snprintf(line, sizeof line, "%s\t%d\t%s\t%zu\t%.4f\t%.4f\t%s\n", split.c_str(), cls,
                    std::string(class_name(cls)).c_str(), s.count, s.mean, s.stddev,
                    format_mean_std(s).c_str());
      out << line;
    }
  }
}

}  // namespace scopeloc
