#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "scopeloc/data.hpp"
#include "scopeloc/rng.hpp"

namespace scopeloc {

namespace {

using Phrase = std::vector<std::string>;

// Cue phrases per class id 1..6. Cue vocabulary is disjoint from fillers and concepts.
const std::array<std::vector<Phrase>, 6>& cue_phrases() {
  static const std::array<std::vector<Phrase>, 6> cues = {{
      {{"shows"}, {"administered"}, {"demonstrates"}, {"there", "is"}},
      {{"no"}, {"without"}, {"negative", "for"}, {"denies"}},
      {{"consider"}, {"if", "indicated"}, {"when", "warranted"}, {"recommend"}},
      {{"assessed", "for"}, {"evaluate", "for"}, {"screening", "for"}, {"characterize"}},
      {{"suggests"}, {"possible"}, {"cannot", "exclude"}, {"likely"}},
      {{"family", "history", "of"}, {"mother", "had"}, {"father", "had"}, {"sibling", "with"}},
  }};
  return cues;
}

constexpr std::size_t kLongestCue = 3;

const std::vector<std::string>& concept_words() {
  static const std::vector<std::string> words = {
      "chest", "pain", "coronary", "artery", "aneurysm", "plaque", "stenosis", "calcification",
      "lesion", "myocardial", "perfusion", "imaging", "effusion", "nodule", "mass", "thrombus",
      "embolism", "dilation", "wall", "thickening", "lung", "cancer", "valve", "regurgitation",
      "aorta", "dissection", "fracture", "edema", "infarction", "ischemia", "fibrosis", "opacity",
      "consolidation", "atelectasis", "pneumothorax", "hernia", "cyst", "adenopathy",
      "hypertrophy", "metoprolol", "nitroglycerin", "mg", "heart", "rate", "left", "right",
      "ventricle", "atrium", "distal", "proximal", "mild", "moderate", "severe", "focal",
      "diffuse", "segment", "branch", "ostium", "stent", "graft", "bypass", "anomaly",
      "malformation", "arteriovenous", "diaphragmatic", "pericardial", "pulmonary", "vein",
      "septal", "defect", "burden", "obstruction", "occlusion"};
  return words;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the", "patient", "was", "scan", "study", "report", "performed", "today", "during",
      "acquisition", "images", "were", "obtained", "in", "this", "regard", "and", "at", "on",
      "prior", "to", "contrast", "protocol", "technique", "quality", "adequate", "are",
      "controlled", "review", "findings", "impression", "comparison", "available",
      "examination", "ct", "cardiac", "gated", "acquired", "reconstructed", "phase", "series",
      "dose", "reduced", "using", "standard"};
  return words;
}

const std::vector<std::string>& boundary_tokens() {
  static const std::vector<std::string> words = {",", ";", "."};
  return words;
}

std::size_t draw_scope_length(Rng& rng, std::size_t max_len) {
  // Geometric with continuation probability 0.7 (mean ~3.3), truncated to [1, max_len].
  std::vector<double> weights(max_len);
  double w = 1.0;
  for (auto& x : weights) {
    x = w;
    w *= 0.7;
  }
  return rng.categorical(weights) + 1;
}

std::string filler(Rng& rng) {
  // Occasional out-of-vocabulary number, embedded as unk.
  if (rng.uniform() < 0.03) return std::to_string(rng.uniform_int(2, 999));
  const auto& words = filler_words();
  return words[rng.index(words.size())];
}

}  // namespace

SynthCorpus synth_generate(const SynthOptions& options) {
  if (options.documents == 0) throw std::invalid_argument("synth needs at least one document");
  if (options.min_tokens < 2 * kLongestCue + 4 || options.max_tokens < options.min_tokens) {
    throw std::invalid_argument("synth token range too small");
  }
  if (options.max_scope == 0) throw std::invalid_argument("synth max_scope must be >= 1");
  const std::vector<double> mix(options.class_mix.begin(), options.class_mix.end());
  if (std::none_of(mix.begin(), mix.end(), [](double w) { return w > 0; }) ||
      std::any_of(mix.begin(), mix.end(), [](double w) { return w < 0; })) {
    throw std::invalid_argument("class_mix needs nonnegative weights with at least one positive");
  }

  Rng rng(options.seed);
  const auto& cues = cue_phrases();
  const auto& concepts = concept_words();
  SynthCorpus corpus;
  corpus.documents.reserve(options.documents);

  for (std::size_t n = 0; n < options.documents; ++n) {
    const auto target = static_cast<std::size_t>(rng.uniform_int(options.min_tokens, options.max_tokens));
    std::vector<std::string> words;
    std::vector<LabeledSpan> gold;
    const std::size_t body = target - 1;  // the last token is "."

    while (true) {
      const std::size_t gap = rng.index(4);
      // Room check uses the longest cue so stopping does not depend on the class drawn.
      if (words.size() + gap + kLongestCue + 1 + 1 > body) break;
      for (std::size_t g = 0; g < gap; ++g) words.push_back(filler(rng));

      const std::size_t cls = rng.categorical(mix);
      const auto& phrases = cues[cls];
      const Phrase& cue = phrases[rng.index(phrases.size())];
      words.insert(words.end(), cue.begin(), cue.end());

      const std::size_t room = body - words.size() - 1;
      const std::size_t len = draw_scope_length(rng, std::min(options.max_scope, room));
      const std::size_t start = words.size();
      for (std::size_t k = 0; k < len; ++k) words.push_back(concepts[rng.index(concepts.size())]);
      gold.push_back({TokenSpan(start, start + len - 1), static_cast<AssertionClass>(cls + 1)});
      words.push_back(boundary_tokens()[rng.index(boundary_tokens().size())]);
    }
    while (words.size() < body) words.push_back(filler(rng));
    words.emplace_back(".");

    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "synth%05zu", n);
    doc.id = id;
    for (std::size_t t = 0; t < words.size(); ++t) {
      if (t > 0) doc.text.push_back(' ');
      const std::size_t begin = doc.text.size();
      doc.text += words[t];
      doc.tokens.push_back({words[t], begin, doc.text.size()});
    }
    doc.gold = std::move(gold);
    corpus.documents.push_back(std::move(doc));
  }

  // Vocabulary in a fixed order: punctuation, fillers, concepts, cues, unk.
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  auto add = [&](const std::string& w) {
    if (seen.insert(w).second) vocab.push_back(w);
  };
  for (const auto& w : boundary_tokens()) add(w);
  for (const auto& w : filler_words()) add(w);
  for (const auto& w : concepts) add(w);
  for (const auto& phrases : cues) {
    for (const auto& p : phrases) {
      for (const auto& w : p) add(w);
    }
  }
  add("unk");

  Rng vec_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<float> vectors(vocab.size() * options.embedding_dim);
  for (auto& v : vectors) {
    // Six decimals so the written file reloads to the same floats.
    v = static_cast<float>(std::round(vec_rng.uniform(-1.0, 1.0) * 1e6) / 1e6);
  }
  corpus.embeddings = EmbeddingTable(vocab, std::move(vectors), options.embedding_dim, vocab.size() - 1);
  return corpus;
}

}  // namespace scopeloc
