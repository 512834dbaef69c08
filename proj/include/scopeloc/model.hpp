#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "scopeloc/tensor.hpp"

namespace scopeloc {

/// Frozen word-vector lookup. Never receives gradients.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> words, std::vector<float> vectors, std::size_t dim,
                 std::size_t unk_index);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : vectors_.size() / dim_; }
  std::size_t unk_index() const { return unk_index_; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<float>& vectors() const { return vectors_; }

  std::size_t lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const float* row(std::size_t i) const { return vectors_.data() + i * dim_; }

 private:
  std::vector<std::string> words_;
  std::vector<float> vectors_;
  std::size_t dim_ = 0;
  std::size_t unk_index_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

/// T x D matrix of word vectors; rejects an empty sequence.
template <typename Real>
Tensor<Real> embed(const EmbeddingTable& table, const std::vector<std::string>& tokens);

struct LayerSpec {
  std::size_t kernel_size = 1;
  std::size_t filters = 1;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelConfig {
  std::size_t embedding_dim = 50;
  std::size_t prior_count = 24;
  std::size_t class_count = 6;
  std::size_t base_filters = 8;
  /// Additional kernel-3 layers appended after the standard twelve, at the last width.
  std::size_t extra_k3_layers = 0;
  std::vector<LayerSpec> conv_stack;
  double match_threshold = 0.5;
  std::size_t max_tokens = 1024;
  std::uint64_t seed = 1;

  /// Six kernel-1 layers, then six kernel-3 layers, with the filter count
  /// doubling every two layers from base_filters (plus any extra kernel-3 layers).
  static std::vector<LayerSpec> standard_stack(std::size_t base_filters,
                                               std::size_t extra_k3_layers = 0);

  /// Fills conv_stack from base_filters/extra_k3_layers if it is empty, then validates.
  ModelConfig& finalize();
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// FNV-1a 64 over the canonical JSON form of the configuration.
std::uint64_t config_hash(const ModelConfig& config);

/// 1 + sum of (K - 1) over a stride-1 stack.
std::size_t receptive_field(const ModelConfig& config);

/// Per-token outputs, flattened in prior-lattice order. class_prob holds C
/// entries per prior; entry k is the probability of class id k + 1.
struct PredictionGrids {
  std::size_t tokens = 0;
  std::size_t priors = 0;
  std::size_t classes = 0;
  std::vector<double> box_conf;
  std::vector<double> class_prob;

  double box(std::size_t t, std::size_t a) const { return box_conf[t * priors + a]; }
  const double* class_row(std::size_t cell) const { return class_prob.data() + cell * classes; }

  friend bool operator==(const PredictionGrids&, const PredictionGrids&) = default;
};

/// d loss / d box_conf and d loss / d class_prob, same layout as PredictionGrids.
struct GridGradients {
  std::vector<double> box_conf;
  std::vector<double> class_prob;
};

/// Embedding -> conv stack (ReLU after each layer) -> two per-token linear heads.
/// The box head is squashed with a sigmoid, the class head softmax-normalized per prior.
template <typename Real>
class SpanNetwork {
 public:
  explicit SpanNetwork(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter<Real>*> parameters();
  std::vector<const Parameter<Real>*> parameters() const;
  void zero_grad();

  /// Forward pass that caches activations for backward().
  PredictionGrids forward(const Tensor<Real>& embedded);
  PredictionGrids forward(const EmbeddingTable& table, const std::vector<std::string>& tokens);

  /// Cache-free forward; safe to call concurrently.
  PredictionGrids infer(const Tensor<Real>& embedded) const;

  /// Pre-ReLU output of every conv layer, in layer order.
  std::vector<Tensor<Real>> conv_preactivations(const Tensor<Real>& embedded) const;

  /// Accumulates parameter gradients for the most recent forward().
  void backward(const GridGradients& grads);

 private:
  struct Activations {
    Tensor<Real> input;
    std::vector<Tensor<Real>> layer_out;  // post-ReLU output per conv layer
    Tensor<Real> box_prob;
    Tensor<Real> class_prob;
  };

  void check_input(const Tensor<Real>& embedded) const;
  PredictionGrids run(const Tensor<Real>& embedded, Activations& acts) const;

  ModelConfig config_;
  std::vector<Parameter<Real>> conv_weight_;
  std::vector<Parameter<Real>> conv_bias_;
  Parameter<Real> box_weight_;
  Parameter<Real> box_bias_;
  Parameter<Real> class_weight_;
  Parameter<Real> class_bias_;
  std::optional<Activations> cache_;
};

}  // namespace scopeloc
