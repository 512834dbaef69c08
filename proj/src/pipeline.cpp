#include "scopeloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "scopeloc/rng.hpp"
#include "scopeloc/span.hpp"

namespace scopeloc {

std::vector<Example> prepare_examples(const std::vector<Document>& docs,
                                      const EmbeddingTable& table, const ModelConfig& config) {
  std::vector<Example> out;
  for (const auto& doc : docs) {
    for (const auto& piece : split_long_document(doc, config.max_tokens)) {
      if (piece.tokens.empty()) continue;
      piece.check_spans();
      const PriorLattice lattice(piece.size(), config.prior_count);
      out.push_back({piece.id, embed<float>(table, piece.token_texts()),
                     assign_targets(lattice, piece.gold, config.match_threshold)});
    }
  }
  return out;
}

TrainResult train(SpanNetwork<float>& network, const std::vector<Document>& train_docs,
                  const std::vector<Document>& val_docs, const EmbeddingTable& table,
                  const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (options.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  const ModelConfig& config = network.config();
  const std::vector<Example> examples = prepare_examples(train_docs, table, config);
  auto params = network.parameters();
  AdamState<float> adam(params, options.adam);
  network.zero_grad();

  Rng rng(options.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  double best_val = -1.0;
  std::size_t since_best = 0;
  const DecodeConfig decode_config{options.gamma};

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    if (options.shuffle) rng.shuffle(order);
    EpochLog log;
    log.epoch = epoch;

    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      std::vector<const TargetGrid*> batch_targets;
      for (std::size_t k = begin; k < end; ++k) batch_targets.push_back(&examples[order[k]].targets);
      const ClassWeights weights = class_weights(batch_targets, config.class_count, options.weighting);
      const double scale = 1.0 / static_cast<double>(end - begin);

      for (std::size_t k = begin; k < end; ++k) {
        const Example& ex = examples[order[k]];
        const PredictionGrids grids = network.forward(ex.input);
        const LossBreakdown loss = total_loss(grids, ex.targets, weights);
        if (!std::isfinite(loss.total)) {
          throw std::runtime_error("non-finite loss on " + ex.id + " at epoch " + std::to_string(epoch));
        }
        log.box_loss += loss.box_loss;
        log.class_loss += loss.class_loss;
        network.backward(loss_gradients(grids, ex.targets, weights, scale));
      }
      adam.update(params);
    }
    if (!examples.empty()) {
      const double n = static_cast<double>(examples.size());
      log.box_loss /= n;
      log.class_loss /= n;
    }
    log.total = log.box_loss + log.class_loss;

    bool stop = false;
    if (options.eval_every > 0 && !val_docs.empty() && epoch % options.eval_every == 0) {
      log.val_macro_f1 = evaluate(network, table, val_docs, decode_config).macro_f1;
      if (log.val_macro_f1 > best_val) {
        best_val = log.val_macro_f1;
        since_best = 0;
      } else {
        ++since_best;
      }
      if (options.target_val_macro_f1 > 0.0 && log.val_macro_f1 >= options.target_val_macro_f1) stop = true;
      if (options.patience > 0 && since_best >= options.patience) stop = true;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stop) {
      result.stopped_early = epoch < options.epochs;
      break;
    }
  }
  return result;
}

DocumentGrids infer_document(const SpanNetwork<float>& network, const EmbeddingTable& table,
                             const Document& doc) {
  DocumentGrids out;
  out.doc_id = doc.id;
  out.tokens = doc.size();
  std::size_t offset = 0;
  for (const auto& piece : split_long_document(doc, network.config().max_tokens)) {
    if (piece.tokens.empty()) continue;
    out.offsets.push_back(offset);
    out.pieces.push_back(network.infer(embed<float>(table, piece.token_texts())));
    offset += piece.size();
  }
  return out;
}

DocumentPrediction decode_document(const DocumentGrids& grids, const DecodeConfig& config) {
  DocumentPrediction pred;
  pred.doc_id = grids.doc_id;
  for (std::size_t k = 0; k < grids.pieces.size(); ++k) {
    for (ScoredBox box : decode(grids.doc_id, grids.pieces[k], config).boxes) {
      const std::size_t off = grids.offsets[k];
      box.prior.anchor += off;
      box.prior.effective_span = TokenSpan(box.prior.effective_span.start + off,
                                           box.prior.effective_span.end + off);
      pred.boxes.push_back(box);
    }
  }
  pred.token_labels = boxes_to_token_labels(pred.spans(), grids.tokens);
  return pred;
}

DocumentPrediction predict_document(const SpanNetwork<float>& network,
                                    const EmbeddingTable& table, const Document& doc,
                                    const DecodeConfig& config) {
  return decode_document(infer_document(network, table, doc), config);
}

EvalReport evaluate_predictions(const std::vector<DocumentPrediction>& predictions,
                                const std::vector<Document>& docs) {
  std::map<std::string, const DocumentPrediction*> by_id;
  for (const auto& p : predictions) by_id[p.doc_id] = &p;

  std::vector<std::vector<int>> pred_labels;
  std::vector<std::vector<int>> gold_labels;
  std::vector<std::vector<LabeledSpan>> pred_spans;
  std::vector<std::vector<LabeledSpan>> gold_spans;
  for (const auto& doc : docs) {
    const auto it = by_id.find(doc.id);
    if (it == by_id.end()) throw std::invalid_argument("no prediction for document " + doc.id);
    pred_labels.push_back(it->second->token_labels);
    pred_spans.push_back(it->second->spans());
    gold_spans.push_back(doc.gold);
    // Raw gold may overlap; later spans overwrite earlier ones token-wise.
    std::vector<int> labels(doc.size(), 0);
    for (const auto& g : doc.gold) {
      for (std::size_t t = g.span.start; t <= g.span.end; ++t) labels[t] = class_index(g.class_id);
    }
    gold_labels.push_back(std::move(labels));
  }
  EvalReport report = token_prf(pred_labels, gold_labels);
  report.span_exact = span_exact_match(pred_spans, gold_spans);
  return report;
}

EvalReport evaluate(const SpanNetwork<float>& network, const EmbeddingTable& table,
                    const std::vector<Document>& docs, const DecodeConfig& config) {
  std::vector<DocumentPrediction> preds;
  preds.reserve(docs.size());
  for (const auto& doc : docs) preds.push_back(predict_document(network, table, doc, config));
  return evaluate_predictions(preds, docs);
}

GradientCheckResult model_gradient_check(const ModelGradcheckSetup& setup,
                                         const std::function<void(SpanNetwork<double>&)>& corrupt) {
  ModelConfig config;
  config.embedding_dim = setup.embedding_dim;
  config.prior_count = setup.prior_count;
  config.class_count = setup.class_count;
  config.base_filters = setup.base_filters;
  config.seed = setup.seed;
  config.finalize();
  SpanNetwork<double> network(config);

  Rng rng(setup.seed ^ 0x5bd1e995ULL);
  auto params = network.parameters();
  std::vector<Parameter<double>*> conv_biases;
  for (auto* p : params) {
    if (p->name.starts_with("conv") && p->name.ends_with(".bias")) conv_biases.push_back(p);
  }
  for (auto* p : params) {
    if (p->name.ends_with(".bias")) {
      for (auto& v : p->value.values()) v = rng.uniform(-0.5, 0.5);
    }
  }
  Tensor<double> input({setup.tokens, setup.embedding_dim});
  for (auto& v : input.values()) v = rng.uniform(-1.0, 1.0);

  // Layer by layer, redraw a channel's bias while any token sits near the kink.
  // A channel that never clears the margin keeps its best draw.
  constexpr int kBiasDraws = 256;
  for (std::size_t layer = 0; layer < conv_biases.size(); ++layer) {
    auto& bias = conv_biases[layer]->value;
    for (std::size_t c = 0; c < bias.size(); ++c) {
      auto clearance = [&] {
        const Tensor<double> pre = network.conv_preactivations(input)[layer];
        const std::size_t channels = pre.dim(1);
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < pre.dim(0); ++t) {
          lowest = std::min(lowest, std::abs(pre[t * channels + c]));
        }
        return lowest;
      };
      double best_value = bias[c];
      double best = clearance();
      for (int draw = 0; draw < kBiasDraws && best < setup.kink_margin; ++draw) {
        bias[c] = rng.uniform(-0.5, 0.5);
        if (const double now = clearance(); now > best) {
          best = now;
          best_value = bias[c];
        }
      }
      bias[c] = best_value;
    }
  }

  std::vector<LabeledSpan> gold;
  for (std::size_t t = 0; t < setup.tokens;) {
    const std::size_t len = 1 + rng.index(setup.prior_count);
    if (t + len > setup.tokens) break;
    if (rng.uniform() < 0.6) {
      const auto cls = static_cast<AssertionClass>(1 + rng.index(setup.class_count));
      gold.push_back({TokenSpan(t, t + len - 1), cls});
    }
    t += len + rng.index(2);
  }
  const PriorLattice lattice(setup.tokens, setup.prior_count);
  const TargetGrid target = assign_targets(lattice, gold, config.match_threshold);
  const TargetGrid* batch[] = {&target};
  const ClassWeights weights = class_weights(batch, setup.class_count);

  auto loss = [&] { return total_loss(network.infer(input), target, weights).total; };
  auto gradients = [&] {
    const PredictionGrids grids = network.forward(input);
    network.backward(loss_gradients(grids, target, weights));
    if (corrupt) corrupt(network);
  };
  return gradient_check(params, loss, gradients, setup.check);
}

}  // namespace scopeloc
