#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scopeloc/model.hpp"
#include "scopeloc/span.hpp"

namespace scopeloc {

struct DecodeConfig {
  double gamma = 0.7;
};

struct ScoredBox {
  PriorBox prior;
  std::size_t cell = 0;  // lattice index
  double score = 0.0;
  AssertionClass class_id = AssertionClass::Present;
  double class_prob = 0.0;

  LabeledSpan labeled() const { return {prior.effective_span, class_id}; }
};

/// Greedy zero-overlap suppression. Priors are visited by descending score
/// (stable on lattice index); the walk stops at the first score <= gamma, and a
/// prior is kept only if it shares no token with any prior kept before it.
/// Returns lattice indices in selection order.
std::vector<std::size_t> nms(std::span<const double> scores, const PriorLattice& priors,
                             double gamma);

/// Argmax class (smallest id on ties) for each selected prior.
std::vector<ScoredBox> classify_boxes(std::span<const std::size_t> selected,
                                      const PredictionGrids& grids, const PriorLattice& priors);

/// Per-token class ids (0 = None). Spans must be pairwise disjoint.
std::vector<int> boxes_to_token_labels(const std::vector<LabeledSpan>& spans, std::size_t tokens);

/// Maximal runs of equal non-zero labels.
std::vector<LabeledSpan> token_labels_to_spans(std::span<const int> labels);

struct DocumentPrediction {
  std::string doc_id;
  std::vector<ScoredBox> boxes;
  std::vector<int> token_labels;

  std::vector<LabeledSpan> spans() const;
};

DocumentPrediction decode(const std::string& doc_id, const PredictionGrids& grids,
                          const DecodeConfig& config);

// Prediction files are JSON lines, one object per document:
//   {"doc_id": str,
//    "spans": [{"start": int, "end": int, "class": str, "box_score": float,
//               "class_prob": float}, ...],        // selection order
//    "token_labels": [int, ...]}                     // class id per token
// "start"/"end" are inclusive 0-based token indices.
void write_prediction(std::ostream& out, const DocumentPrediction& prediction);
std::vector<DocumentPrediction> read_predictions(std::istream& in);
std::vector<DocumentPrediction> read_predictions(const std::string& path);

}  // namespace scopeloc
