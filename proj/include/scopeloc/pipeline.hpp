#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scopeloc/adam.hpp"
#include "scopeloc/data.hpp"
#include "scopeloc/decode.hpp"
#include "scopeloc/eval.hpp"
#include "scopeloc/gradcheck.hpp"
#include "scopeloc/model.hpp"
#include "scopeloc/objective.hpp"

namespace scopeloc {

/// A training unit: embedded tokens plus their targets. Long documents
/// contribute one example per piece.
struct Example {
  std::string id;
  Tensor<float> input;
  TargetGrid targets;
};

std::vector<Example> prepare_examples(const std::vector<Document>& docs,
                                      const EmbeddingTable& table, const ModelConfig& config);

struct TrainOptions {
  AdamConfig adam;
  std::size_t epochs = 400;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  bool shuffle = true;
  ClassWeighting weighting = ClassWeighting::InverseFrequency;
  double gamma = 0.7;
  /// Stop after this many evaluations without a better validation macro-F1 (0 = never).
  std::size_t patience = 0;
  /// Stop once validation macro-F1 reaches this value (0 = never).
  double target_val_macro_f1 = 0.0;
  /// Evaluate on the validation set every this many epochs (0 = never).
  std::size_t eval_every = 1;
};

struct EpochLog {
  std::size_t epoch = 0;
  double box_loss = 0.0;
  double class_loss = 0.0;
  double total = 0.0;
  double val_macro_f1 = -1.0;  // -1 when not evaluated this epoch
};

struct TrainResult {
  std::vector<EpochLog> log;
  bool stopped_early = false;
};

TrainResult train(SpanNetwork<float>& network, const std::vector<Document>& train_docs,
                  const std::vector<Document>& val_docs, const EmbeddingTable& table,
                  const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Network outputs for one document, one grid per piece when the document
/// exceeds the model's max_tokens.
struct DocumentGrids {
  std::string doc_id;
  std::size_t tokens = 0;
  std::vector<std::size_t> offsets;
  std::vector<PredictionGrids> pieces;
};

DocumentGrids infer_document(const SpanNetwork<float>& network, const EmbeddingTable& table,
                             const Document& doc);
DocumentPrediction decode_document(const DocumentGrids& grids, const DecodeConfig& config);
DocumentPrediction predict_document(const SpanNetwork<float>& network,
                                    const EmbeddingTable& table, const Document& doc,
                                    const DecodeConfig& config);

/// Scores predictions against the gold spans of `docs` (matched by id).
EvalReport evaluate_predictions(const std::vector<DocumentPrediction>& predictions,
                                const std::vector<Document>& docs);

EvalReport evaluate(const SpanNetwork<float>& network, const EmbeddingTable& table,
                    const std::vector<Document>& docs, const DecodeConfig& config);

/// Whole-model finite-difference check on a small double-precision network
/// with random inputs, random gold spans and randomized biases.
struct ModelGradcheckSetup {
  std::size_t tokens = 10;
  std::size_t embedding_dim = 8;
  std::size_t prior_count = 4;
  std::size_t class_count = 3;
  std::size_t base_filters = 2;
  std::uint64_t seed = 1;
  /// Conv pre-activations are kept at least this far from zero (biases are
  /// redrawn per channel) so no finite-difference step crosses a ReLU kink.
  double kink_margin = 1e-2;
  GradientCheckOptions check;
};

/// `corrupt` runs after every analytic backward pass and may tamper with the
/// gradients, which is how the check itself is tested.
GradientCheckResult model_gradient_check(
    const ModelGradcheckSetup& setup,
    const std::function<void(SpanNetwork<double>&)>& corrupt = {});

}  // namespace scopeloc
