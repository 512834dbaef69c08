#include "scopeloc/model.hpp"

#include <cmath>
#include <stdexcept>

#include "scopeloc/kernels.hpp"
#include "scopeloc/rng.hpp"

namespace scopeloc {

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, std::vector<float> vectors,
                               std::size_t dim, std::size_t unk_index)
    : words_(std::move(words)), vectors_(std::move(vectors)), dim_(dim), unk_index_(unk_index) {
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
  if (vectors_.size() != words_.size() * dim_) {
    throw std::invalid_argument("embedding matrix does not match vocabulary size");
  }
  if (unk_index_ >= words_.size()) throw std::invalid_argument("unk index outside table");
  for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = i;
}

std::size_t EmbeddingTable::lookup(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? unk_index_ : it->second;
}

template <typename Real>
Tensor<Real> embed(const EmbeddingTable& table, const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("cannot embed an empty token sequence");
  const std::size_t dim = table.dim();
  Tensor<Real> out({tokens.size(), dim});
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const float* src = table.row(table.lookup(tokens[t]));
    Real* dst = out.row(t);
    for (std::size_t d = 0; d < dim; ++d) dst[d] = static_cast<Real>(src[d]);
  }
  return out;
}

template Tensor<float> embed<float>(const EmbeddingTable&, const std::vector<std::string>&);
template Tensor<double> embed<double>(const EmbeddingTable&, const std::vector<std::string>&);

std::vector<LayerSpec> ModelConfig::standard_stack(std::size_t base_filters,
                                                   std::size_t extra_k3_layers) {
  std::vector<LayerSpec> stack;
  std::size_t filters = base_filters;
  for (std::size_t i = 0; i < 12; ++i) {
    if (i > 0 && i % 2 == 0) filters *= 2;
    stack.push_back({i < 6 ? 1u : 3u, filters});
  }
  for (std::size_t i = 0; i < extra_k3_layers; ++i) stack.push_back({3, filters});
  return stack;
}

ModelConfig& ModelConfig::finalize() {
  if (conv_stack.empty()) conv_stack = standard_stack(base_filters, extra_k3_layers);
  validate();
  return *this;
}

void ModelConfig::validate() const {
  if (embedding_dim == 0) throw std::invalid_argument("embedding_dim must be >= 1");
  if (prior_count == 0) throw std::invalid_argument("prior_count must be >= 1");
  if (class_count == 0 || class_count > 6) throw std::invalid_argument("class_count must be in 1..6");
  if (max_tokens == 0) throw std::invalid_argument("max_tokens must be >= 1");
  if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) {
    throw std::invalid_argument("match_threshold must be in [0, 1]");
  }
  if (conv_stack.empty()) throw std::invalid_argument("conv_stack is empty");
  for (const auto& layer : conv_stack) {
    if (layer.kernel_size % 2 == 0) throw std::invalid_argument("conv kernel sizes must be odd");
    if (layer.filters == 0) throw std::invalid_argument("conv filter counts must be >= 1");
  }
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json stack = nlohmann::json::array();
  for (const auto& layer : conv_stack) {
    stack.push_back({{"kernel_size", layer.kernel_size}, {"filters", layer.filters}});
  }
  return {{"embedding_dim", embedding_dim},
          {"prior_count", prior_count},
          {"class_count", class_count},
          {"base_filters", base_filters},
          {"extra_k3_layers", extra_k3_layers},
          {"conv_stack", stack},
          {"match_threshold", match_threshold},
          {"max_tokens", max_tokens},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.prior_count = j.at("prior_count").get<std::size_t>();
  c.class_count = j.at("class_count").get<std::size_t>();
  c.base_filters = j.at("base_filters").get<std::size_t>();
  c.extra_k3_layers = j.at("extra_k3_layers").get<std::size_t>();
  for (const auto& layer : j.at("conv_stack")) {
    c.conv_stack.push_back(
        {layer.at("kernel_size").get<std::size_t>(), layer.at("filters").get<std::size_t>()});
  }
  c.match_threshold = j.at("match_threshold").get<double>();
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

std::uint64_t config_hash(const ModelConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t receptive_field(const ModelConfig& config) {
  std::size_t field = 1;
  for (const auto& layer : config.conv_stack) field += layer.kernel_size - 1;
  return field;
}

namespace {

template <typename Real>
void xavier_uniform(Tensor<Real>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename Real>
SpanNetwork<Real>::SpanNetwork(ModelConfig config) : config_(std::move(config)) {
  config_.finalize();
  Rng rng(config_.seed);
  std::size_t width = config_.embedding_dim;
  for (std::size_t i = 0; i < config_.conv_stack.size(); ++i) {
    const auto& spec = config_.conv_stack[i];
    const std::string prefix = "conv" + std::to_string(i);
    conv_weight_.emplace_back(prefix + ".weight",
                              std::vector<std::size_t>{spec.kernel_size, width, spec.filters});
    conv_bias_.emplace_back(prefix + ".bias", std::vector<std::size_t>{spec.filters});
    xavier_uniform(conv_weight_.back().value, spec.kernel_size * width,
                   spec.kernel_size * spec.filters, rng);
    width = spec.filters;
  }
  const std::size_t priors = config_.prior_count;
  const std::size_t class_width = priors * config_.class_count;
  box_weight_ = Parameter<Real>("box_head.weight", {width, priors});
  box_bias_ = Parameter<Real>("box_head.bias", {priors});
  class_weight_ = Parameter<Real>("class_head.weight", {width, class_width});
  class_bias_ = Parameter<Real>("class_head.bias", {class_width});
  xavier_uniform(box_weight_.value, width, priors, rng);
  xavier_uniform(class_weight_.value, width, class_width, rng);
}

template <typename Real>
std::vector<Parameter<Real>*> SpanNetwork<Real>::parameters() {
  std::vector<Parameter<Real>*> out;
  for (std::size_t i = 0; i < conv_weight_.size(); ++i) {
    out.push_back(&conv_weight_[i]);
    out.push_back(&conv_bias_[i]);
  }
  out.push_back(&box_weight_);
  out.push_back(&box_bias_);
  out.push_back(&class_weight_);
  out.push_back(&class_bias_);
  return out;
}

template <typename Real>
std::vector<const Parameter<Real>*> SpanNetwork<Real>::parameters() const {
  std::vector<const Parameter<Real>*> out;
  for (auto* p : const_cast<SpanNetwork*>(this)->parameters()) out.push_back(p);
  return out;
}

template <typename Real>
void SpanNetwork<Real>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename Real>
void SpanNetwork<Real>::check_input(const Tensor<Real>& embedded) const {
  if (embedded.rank() != 2 || embedded.dim(1) != config_.embedding_dim) {
    throw std::invalid_argument("network input must be T x " +
                                std::to_string(config_.embedding_dim) + ", got " +
                                shape_string(embedded.shape()));
  }
  if (embedded.dim(0) == 0) throw std::invalid_argument("network input has no tokens");
  if (embedded.dim(0) > config_.max_tokens) {
    throw std::invalid_argument("input of " + std::to_string(embedded.dim(0)) +
                                " tokens exceeds max_tokens = " +
                                std::to_string(config_.max_tokens));
  }
}

template <typename Real>
PredictionGrids SpanNetwork<Real>::run(const Tensor<Real>& embedded, Activations& acts) const {
  check_input(embedded);
  acts.input = embedded;
  acts.layer_out.resize(conv_weight_.size());
  const Tensor<Real>* x = &acts.input;
  Tensor<Real> pre;
  for (std::size_t i = 0; i < conv_weight_.size(); ++i) {
    kernels::conv1d_forward(*x, conv_weight_[i].value, conv_bias_[i].value, pre);
    kernels::relu_forward(pre, acts.layer_out[i]);
    x = &acts.layer_out[i];
  }

  Tensor<Real> box_logits;
  Tensor<Real> class_logits;
  kernels::dense_forward(*x, box_weight_.value, box_bias_.value, box_logits);
  kernels::dense_forward(*x, class_weight_.value, class_bias_.value, class_logits);
  kernels::sigmoid_forward(box_logits, acts.box_prob);
  kernels::softmax_forward(class_logits, config_.class_count, acts.class_prob);

  PredictionGrids grids;
  grids.tokens = embedded.dim(0);
  grids.priors = config_.prior_count;
  grids.classes = config_.class_count;
  grids.box_conf.assign(acts.box_prob.values().begin(), acts.box_prob.values().end());
  grids.class_prob.assign(acts.class_prob.values().begin(), acts.class_prob.values().end());
  return grids;
}

template <typename Real>
std::vector<Tensor<Real>> SpanNetwork<Real>::conv_preactivations(const Tensor<Real>& embedded) const {
  check_input(embedded);
  std::vector<Tensor<Real>> pre(conv_weight_.size());
  Tensor<Real> x = embedded;
  for (std::size_t i = 0; i < conv_weight_.size(); ++i) {
    kernels::conv1d_forward(x, conv_weight_[i].value, conv_bias_[i].value, pre[i]);
    kernels::relu_forward(pre[i], x);
  }
  return pre;
}

template <typename Real>
PredictionGrids SpanNetwork<Real>::forward(const Tensor<Real>& embedded) {
  Activations acts;
  PredictionGrids grids = run(embedded, acts);
  cache_ = std::move(acts);
  return grids;
}

template <typename Real>
PredictionGrids SpanNetwork<Real>::forward(const EmbeddingTable& table,
                                           const std::vector<std::string>& tokens) {
  return forward(embed<Real>(table, tokens));
}

template <typename Real>
PredictionGrids SpanNetwork<Real>::infer(const Tensor<Real>& embedded) const {
  Activations acts;
  return run(embedded, acts);
}

template <typename Real>
void SpanNetwork<Real>::backward(const GridGradients& grads) {
  if (!cache_) throw std::logic_error("SpanNetwork::backward called before forward");
  const Activations& acts = *cache_;
  const std::size_t tokens = acts.input.dim(0);
  const std::size_t priors = config_.prior_count;
  const std::size_t classes = config_.class_count;
  if (grads.box_conf.size() != tokens * priors ||
      grads.class_prob.size() != tokens * priors * classes) {
    throw std::invalid_argument("gradient grids do not match the last forward pass");
  }

  Tensor<Real> g_box({tokens, priors}, std::vector<Real>(grads.box_conf.begin(), grads.box_conf.end()));
  Tensor<Real> g_class({tokens, priors * classes},
                       std::vector<Real>(grads.class_prob.begin(), grads.class_prob.end()));
  Tensor<Real> g_box_logits;
  Tensor<Real> g_class_logits;
  kernels::sigmoid_backward(acts.box_prob, g_box, g_box_logits);
  kernels::softmax_backward(acts.class_prob, g_class, classes, g_class_logits);

  const Tensor<Real>& trunk = acts.layer_out.back();
  Tensor<Real> g_trunk;
  Tensor<Real> g_trunk_class;
  kernels::dense_backward(trunk, box_weight_.value, g_box_logits, &g_trunk, box_weight_.grad,
                          box_bias_.grad);
  kernels::dense_backward(trunk, class_weight_.value, g_class_logits, &g_trunk_class,
                          class_weight_.grad, class_bias_.grad);
  for (std::size_t i = 0; i < g_trunk.size(); ++i) g_trunk[i] += g_trunk_class[i];

  Tensor<Real> g_pre;
  for (std::size_t i = conv_weight_.size(); i-- > 0;) {
    kernels::relu_backward(acts.layer_out[i], g_trunk, g_pre);
    const Tensor<Real>& in = i == 0 ? acts.input : acts.layer_out[i - 1];
    // The embedding is frozen, so the first layer needs no input gradient.
    kernels::conv1d_backward(in, conv_weight_[i].value, g_pre, i == 0 ? nullptr : &g_trunk,
                             conv_weight_[i].grad, conv_bias_[i].grad);
  }
}

template class SpanNetwork<float>;
template class SpanNetwork<double>;

}  // namespace scopeloc
