#include "scopeloc/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace scopeloc {

std::vector<std::size_t> nms(std::span<const double> scores, const PriorLattice& priors,
                             double gamma) {
  if (scores.size() != priors.size()) {
    throw std::invalid_argument("score grid does not match prior lattice");
  }
  if (!std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); })) {
    throw std::invalid_argument("box scores must be finite");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (scores[idx] <= gamma) break;
    const TokenSpan& box = priors[idx].effective_span;
    double max_iou = 0.0;
    for (std::size_t k : kept) max_iou = std::max(max_iou, span_iou(box, priors[k].effective_span));
    if (max_iou == 0.0) kept.push_back(idx);
  }
  return kept;
}

std::vector<ScoredBox> classify_boxes(std::span<const std::size_t> selected,
                                      const PredictionGrids& grids, const PriorLattice& priors) {
  std::vector<ScoredBox> out;
  out.reserve(selected.size());
  for (std::size_t cell : selected) {
    if (cell >= priors.size()) throw std::out_of_range("selected prior outside lattice");
    const double* row = grids.class_row(cell);
    std::size_t best = 0;
    for (std::size_t k = 1; k < grids.classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    ScoredBox box;
    box.prior = priors[cell];
    box.cell = cell;
    box.score = grids.box_conf[cell];
    box.class_id = static_cast<AssertionClass>(best + 1);
    box.class_prob = row[best];
    out.push_back(box);
  }
  return out;
}

std::vector<int> boxes_to_token_labels(const std::vector<LabeledSpan>& spans, std::size_t tokens) {
  std::vector<int> labels(tokens, 0);
  std::vector<bool> taken(tokens, false);
  for (const auto& s : spans) {
    if (s.span.end >= tokens) throw std::out_of_range("span extends past the sequence");
    for (std::size_t t = s.span.start; t <= s.span.end; ++t) {
      if (taken[t]) throw std::invalid_argument("overlapping spans cannot be converted to token labels");
      taken[t] = true;
      labels[t] = class_index(s.class_id);
    }
  }
  return labels;
}

std::vector<LabeledSpan> token_labels_to_spans(std::span<const int> labels) {
  std::vector<LabeledSpan> spans;
  std::size_t t = 0;
  while (t < labels.size()) {
    if (labels[t] == 0) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end + 1 < labels.size() && labels[end + 1] == labels[t]) ++end;
    spans.push_back({TokenSpan(t, end), static_cast<AssertionClass>(labels[t])});
    t = end + 1;
  }
  return spans;
}

std::vector<LabeledSpan> DocumentPrediction::spans() const {
  std::vector<LabeledSpan> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back(b.labeled());
  return out;
}

DocumentPrediction decode(const std::string& doc_id, const PredictionGrids& grids,
                          const DecodeConfig& config) {
  const PriorLattice lattice(grids.tokens, grids.priors);
  const auto selected = nms(grids.box_conf, lattice, config.gamma);
  DocumentPrediction pred;
  pred.doc_id = doc_id;
  pred.boxes = classify_boxes(selected, grids, lattice);
  pred.token_labels = boxes_to_token_labels(pred.spans(), grids.tokens);
  return pred;
}

void write_prediction(std::ostream& out, const DocumentPrediction& prediction) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& b : prediction.boxes) {
    spans.push_back({{"start", b.prior.effective_span.start},
                     {"end", b.prior.effective_span.end},
                     {"class", class_name(b.class_id)},
                     {"box_score", b.score},
                     {"class_prob", b.class_prob}});
  }
  const nlohmann::json record = {
      {"doc_id", prediction.doc_id}, {"spans", spans}, {"token_labels", prediction.token_labels}};
  out << record.dump() << '\n';
}

std::vector<DocumentPrediction> read_predictions(std::istream& in) {
  std::vector<DocumentPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DocumentPrediction pred;
      pred.doc_id = j.at("doc_id").get<std::string>();
      pred.token_labels = j.at("token_labels").get<std::vector<int>>();
      for (const auto& s : j.at("spans")) {
        ScoredBox box;
        const auto start = s.at("start").get<std::size_t>();
        const auto end = s.at("end").get<std::size_t>();
        box.prior.anchor = start;
        box.prior.nominal_length = end - start + 1;
        box.prior.effective_span = TokenSpan(start, end);
        const auto name = s.at("class").get<std::string>();
        const auto cls = class_from_name(name);
        if (!cls || *cls == AssertionClass::None) throw std::invalid_argument("unknown class " + name);
        box.class_id = *cls;
        box.score = s.at("box_score").get<double>();
        box.class_prob = s.at("class_prob").get<double>();
        pred.boxes.push_back(box);
      }
      out.push_back(std::move(pred));
    } catch (const std::exception& e) {
      throw std::runtime_error("prediction line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DocumentPrediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions " + path);
  return read_predictions(in);
}

}  // namespace scopeloc
