#include "scopeloc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace scopeloc {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEnvPrefix = "SCOPELOC_";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw std::invalid_argument("config key '" + std::string(key) + "': invalid value '" +
                              std::string(value) + "' (expected " + std::string(want) + ")");
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> parse_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start));
    out.push_back(parse_double(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename Seq>
std::string fmt_list(const Seq& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ',';
    out += fmt(v);
  }
  return out;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct KeyImpl {
  std::string name;
  std::string description;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Int>
KeyImpl int_key(std::string name, std::string description, Int min_value,
                std::function<Int&(RunConfig&)> field) {
  const std::string n = name;
  return {std::move(name), std::move(description),
          [n, min_value, field](RunConfig& c, std::string_view v) {
            const Int x = parse_int<Int>(n, v);
            if (x < min_value) bad_value(n, v, "an integer >= " + std::to_string(min_value));
            field(c) = x;
          },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

KeyImpl real_key(std::string name, std::string description, double lo, double hi,
                 std::function<double&(RunConfig&)> field) {
  const std::string n = name;
  return {std::move(name), std::move(description),
          [n, lo, hi, field](RunConfig& c, std::string_view v) {
            const double x = parse_double(n, v);
            if (!(x >= lo && x <= hi)) bad_value(n, v, "a number in [" + fmt(lo) + ", " + fmt(hi) + "]");
            field(c) = x;
          },
          [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c))); }};
}

KeyImpl path_key(std::string name, std::string description, std::function<fs::path&(RunConfig&)> field) {
  return {std::move(name), std::move(description),
          [field](RunConfig& c, std::string_view v) { field(c) = fs::path(std::string(v)); },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)).string(); }};
}

KeyImpl split_key(std::string name, std::string description, bool allow_all,
                  std::function<std::string&(RunConfig&)> field) {
  const std::string n = name;
  return {std::move(name), std::move(description),
          [n, allow_all, field](RunConfig& c, std::string_view v) {
            if (!(allow_all && v == "all")) {
              try {
                (void)split_from_name(v);
              } catch (const std::invalid_argument&) {
                bad_value(n, v, allow_all ? "train, val, test or all" : "train, val or test");
              }
            }
            field(c) = std::string(v);
          },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

const std::vector<KeyImpl>& key_table() {
  static const std::vector<KeyImpl> keys = [] {
    std::vector<KeyImpl> k;
    k.push_back(path_key("out_dir", "Directory for every output file", [](RunConfig& c) -> fs::path& { return c.out_dir; }));
    k.push_back(path_key("corpus_dir", "BRAT corpus directory (empty: <out_dir>/corpus)", [](RunConfig& c) -> fs::path& { return c.corpus_dir; }));
    k.push_back(path_key("embeddings", "Word-vector text file (empty: <out_dir>/embeddings.txt)", [](RunConfig& c) -> fs::path& { return c.embeddings; }));
    k.push_back(path_key("checkpoint", "Model checkpoint (empty: <out_dir>/model.ckpt)", [](RunConfig& c) -> fs::path& { return c.checkpoint; }));
    k.push_back(path_key("predictions", "Prediction JSONL file (empty: <out_dir>/predictions.jsonl)", [](RunConfig& c) -> fs::path& { return c.predictions; }));
    k.push_back(path_key("manifest", "Split manifest (empty: <corpus_dir>/split.tsv)", [](RunConfig& c) -> fs::path& { return c.manifest; }));
    k.push_back(int_key<std::uint64_t>("seed", "Seed for synthesis, splitting, initialization and shuffling", 0, [](RunConfig& c) -> std::uint64_t& { return c.seed; }));

    k.push_back(int_key<std::size_t>("embedding_dim", "Word-vector dimension D (must match the embedding file)", 1, [](RunConfig& c) -> std::size_t& { return c.model.embedding_dim; }));
    k.push_back(int_key<std::size_t>("prior_count", "Prior boxes per token A (lengths 1..A)", 1, [](RunConfig& c) -> std::size_t& { return c.model.prior_count; }));
    k.push_back(int_key<std::size_t>("class_count", "Assertion classes C (1..6)", 1, [](RunConfig& c) -> std::size_t& { return c.model.class_count; }));
    k.push_back(int_key<std::size_t>("base_filters", "Filters of the first two conv layers; doubles every two layers", 1, [](RunConfig& c) -> std::size_t& { return c.model.base_filters; }));
    k.push_back(int_key<std::size_t>("extra_k3_layers", "Kernel-3 layers appended to the standard twelve", 0, [](RunConfig& c) -> std::size_t& { return c.model.extra_k3_layers; }));
    k.push_back(real_key("match_threshold", "Minimum IoU for a prior to count as positive", 0.0, 1.0, [](RunConfig& c) -> double& { return c.model.match_threshold; }));
    k.push_back(int_key<std::size_t>("max_tokens", "Longest sequence the network accepts; longer documents are split", 1, [](RunConfig& c) -> std::size_t& { return c.model.max_tokens; }));

    k.push_back(real_key("learning_rate", "Adam step size", 0.0, 1e6, [](RunConfig& c) -> double& { return c.train.adam.learning_rate; }));
    k.push_back(real_key("adam_beta1", "Adam first-moment decay", 0.0, 0.999999, [](RunConfig& c) -> double& { return c.train.adam.beta1; }));
    k.push_back(real_key("adam_beta2", "Adam second-moment decay", 0.0, 0.999999999, [](RunConfig& c) -> double& { return c.train.adam.beta2; }));
    k.push_back(real_key("adam_epsilon", "Adam denominator epsilon", 0.0, 1.0, [](RunConfig& c) -> double& { return c.train.adam.epsilon; }));
    k.push_back(int_key<std::size_t>("epochs", "Training epochs", 0, [](RunConfig& c) -> std::size_t& { return c.train.epochs; }));
    k.push_back(int_key<std::size_t>("batch_size", "Documents per optimizer step", 1, [](RunConfig& c) -> std::size_t& { return c.train.batch_size; }));
    k.push_back({"shuffle", "Reshuffle the training documents every epoch",
                 [](RunConfig& c, std::string_view v) { c.train.shuffle = parse_bool("shuffle", v); },
                 [](const RunConfig& c) { return fmt_bool(c.train.shuffle); }});
    k.push_back({"class_weighting", "Class-loss weights: inverse (N / (C_present * N_c)) or fraction (N_c / N)",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "inverse") {
                     c.train.weighting = ClassWeighting::InverseFrequency;
                   } else if (v == "fraction") {
                     c.train.weighting = ClassWeighting::Fraction;
                   } else {
                     bad_value("class_weighting", v, "inverse or fraction");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.train.weighting == ClassWeighting::Fraction ? "fraction" : "inverse");
                 }});
    k.push_back(int_key<std::size_t>("patience", "Stop after this many validations without improvement (0: off)", 0, [](RunConfig& c) -> std::size_t& { return c.train.patience; }));
    k.push_back(real_key("target_val_macro_f1", "Stop once validation macro-F1 reaches this value (0: off)", 0.0, 1.0, [](RunConfig& c) -> double& { return c.train.target_val_macro_f1; }));
    k.push_back(int_key<std::size_t>("eval_every", "Validate every this many epochs (0: never)", 0, [](RunConfig& c) -> std::size_t& { return c.train.eval_every; }));

    k.push_back(real_key("gamma", "Box-confidence threshold for decoding", 0.0, 2.0, [](RunConfig& c) -> double& { return c.decode.gamma; }));
    k.push_back({"gamma_grid", "Comma-separated thresholds for sweep-gamma",
                 [](RunConfig& c, std::string_view v) {
                   auto grid = parse_list("gamma_grid", v);
                   if (grid.empty()) bad_value("gamma_grid", v, "at least one threshold");
                   c.gamma_grid = std::move(grid);
                 },
                 [](const RunConfig& c) { return fmt_list(c.gamma_grid); }});
    k.push_back({"split_ratios", "Relative train,val,test weights for a new split",
                 [](RunConfig& c, std::string_view v) {
                   const auto r = parse_list("split_ratios", v);
                   if (r.size() != 3 || r[0] <= 0 || r[1] <= 0 || r[2] <= 0) {
                     bad_value("split_ratios", v, "three positive numbers");
                   }
                   c.split_ratios = {r[0], r[1], r[2]};
                 },
                 [](const RunConfig& c) { return fmt_list(c.split_ratios); }});
    k.push_back(split_key("predict_split", "Split predicted and evaluated: train, val, test or all", true, [](RunConfig& c) -> std::string& { return c.predict_split; }));
    k.push_back(split_key("sweep_split", "Split scored by sweep-gamma", true, [](RunConfig& c) -> std::string& { return c.sweep_split; }));
    k.push_back(int_key<int>("threads", "OpenMP threads (0: runtime default)", 0, [](RunConfig& c) -> int& { return c.threads; }));

    k.push_back(int_key<std::size_t>("synth_documents", "Documents generated by synth", 3, [](RunConfig& c) -> std::size_t& { return c.synth.documents; }));
    k.push_back({"synth_class_mix", "Relative frequency of the six classes in generated scopes",
                 [](RunConfig& c, std::string_view v) {
                   const auto m = parse_list("synth_class_mix", v);
                   if (m.size() != 6) bad_value("synth_class_mix", v, "six numbers");
                   std::copy(m.begin(), m.end(), c.synth.class_mix.begin());
                 },
                 [](const RunConfig& c) { return fmt_list(c.synth.class_mix); }});
    k.push_back(int_key<std::size_t>("synth_min_tokens", "Shortest generated document", 10, [](RunConfig& c) -> std::size_t& { return c.synth.min_tokens; }));
    k.push_back(int_key<std::size_t>("synth_max_tokens", "Longest generated document", 10, [](RunConfig& c) -> std::size_t& { return c.synth.max_tokens; }));
    k.push_back(int_key<std::size_t>("synth_max_scope", "Longest generated scope", 1, [](RunConfig& c) -> std::size_t& { return c.synth.max_scope; }));

    k.push_back(int_key<std::size_t>("gradcheck_tokens", "Sequence length of the gradient-check model", 1, [](RunConfig& c) -> std::size_t& { return c.gradcheck.tokens; }));
    k.push_back(int_key<std::size_t>("gradcheck_embedding_dim", "Input dimension of the gradient-check model", 1, [](RunConfig& c) -> std::size_t& { return c.gradcheck.embedding_dim; }));
    k.push_back(int_key<std::size_t>("gradcheck_prior_count", "Priors per token of the gradient-check model", 1, [](RunConfig& c) -> std::size_t& { return c.gradcheck.prior_count; }));
    k.push_back(int_key<std::size_t>("gradcheck_class_count", "Classes of the gradient-check model", 1, [](RunConfig& c) -> std::size_t& { return c.gradcheck.class_count; }));
    k.push_back(int_key<std::size_t>("gradcheck_base_filters", "Base filters of the gradient-check model", 1, [](RunConfig& c) -> std::size_t& { return c.gradcheck.base_filters; }));
    k.push_back(real_key("gradcheck_eps", "Central-difference step", 1e-12, 1.0, [](RunConfig& c) -> double& { return c.gradcheck.check.eps; }));
    k.push_back(real_key("gradcheck_kink_margin", "Distance from zero that conv pre-activations must clear before the check runs", 0.0, 1.0, [](RunConfig& c) -> double& { return c.gradcheck.kink_margin; }));
    k.push_back(real_key("gradcheck_tolerance", "Largest accepted relative error", 0.0, 1.0, [](RunConfig& c) -> double& { return c.gradcheck_tolerance; }));
    return k;
  }();
  return keys;
}

const KeyImpl* find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

RunConfig RunConfig::resolved() const {
  RunConfig c = *this;
  if (c.corpus_dir.empty()) c.corpus_dir = c.out_dir / "corpus";
  if (c.embeddings.empty()) c.embeddings = c.out_dir / "embeddings.txt";
  if (c.checkpoint.empty()) c.checkpoint = c.out_dir / "model.ckpt";
  if (c.predictions.empty()) c.predictions = c.out_dir / "predictions.jsonl";
  if (c.manifest.empty()) c.manifest = c.corpus_dir / "split.tsv";
  const double sum = c.split_ratios[0] + c.split_ratios[1] + c.split_ratios[2];
  for (auto& r : c.split_ratios) r /= sum;
  c.model.seed = c.seed;
  c.model.conv_stack.clear();
  c.model.finalize();
  c.train.seed = c.seed;
  c.train.gamma = c.decode.gamma;
  c.synth.seed = c.seed;
  c.synth.embedding_dim = c.model.embedding_dim;
  c.gradcheck.seed = c.seed;
  if (c.synth.max_tokens < c.synth.min_tokens) {
    throw std::invalid_argument("config keys 'synth_min_tokens'/'synth_max_tokens': minimum exceeds maximum");
  }
  return c;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    const RunConfig defaults;
    std::vector<ConfigKey> out;
    for (const auto& k : key_table()) out.push_back({k.name, k.get(defaults), k.description});
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const KeyImpl* k = find_key(key);
  if (k == nullptr) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  k->set(config, trim(value));
}

void apply_config_text(RunConfig& config, std::string_view text, const std::string& source) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(source + " line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(source + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  apply_config_text(config, os.str(), path.string());
}

void apply_environment(RunConfig& config, const std::vector<std::string>& env) {
  for (const auto& entry : env) {
    if (!entry.starts_with(kEnvPrefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(kEnvPrefix.size(), eq - kEnvPrefix.size());
    for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (find_key(key) == nullptr) {
      throw std::invalid_argument("unknown environment override " + entry.substr(0, eq));
    }
    try {
      set_config_value(config, key, std::string_view(entry).substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("environment " + entry.substr(0, eq) + ": " + e.what());
    }
  }
}

std::vector<std::string> process_environment() {
  std::vector<std::string> out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) out.emplace_back(*e);
  return out;
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& k : key_table()) out << k.name << " = " << k.get(config) << '\n';
}

void write_config_reference(std::ostream& out) {
  out << "| key | default | description |\n|---|---|---|\n";
  for (const auto& k : config_keys()) {
    out << "| `" << k.name << "` | `" << k.default_value << "` | " << k.description << " |\n";
  }
}

}  // namespace scopeloc
