#include "scopeloc/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "scopeloc/checkpoint.hpp"
#include "scopeloc/eval.hpp"

namespace scopeloc {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

EmbeddingTable load_table(const RunConfig& c, std::size_t expected_dim, std::ostream& log) {
  auto loaded = load_embeddings(c.embeddings);
  for (const auto& w : loaded.warnings) log << "warning: " << w << '\n';
  if (loaded.table.dim() != expected_dim) {
    throw std::invalid_argument("embedding file " + c.embeddings.string() + " has dimension " +
                                std::to_string(loaded.table.dim()) + " but the model expects " +
                                std::to_string(expected_dim));
  }
  return std::move(loaded.table);
}

std::map<std::string, ScopeHistogram> histograms_by_split(const CorpusSplit& split) {
  std::map<std::string, ScopeHistogram> out;
  for (std::size_t j = 0; j < 3; ++j) {
    out[std::string(split_name(static_cast<Split>(j)))] = scope_length_histogram(split.parts[j]);
  }
  return out;
}

}  // namespace

CorpusSplit load_corpus_split(const RunConfig& c) {
  const std::vector<Document> docs = read_corpus(c.corpus_dir);
  if (docs.empty()) throw std::invalid_argument("corpus directory " + c.corpus_dir.string() + " has no documents");
  if (fs::exists(c.manifest)) return apply_manifest(docs, read_manifest(c.manifest));
  return stratified_split(docs, c.split_ratios, c.seed);
}

std::vector<Document> select_split(const CorpusSplit& split, const std::string& name) {
  if (name != "all") return split[split_from_name(name)];
  std::vector<Document> all;
  for (const auto& part : split.parts) all.insert(all.end(), part.begin(), part.end());
  std::sort(all.begin(), all.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
  return all;
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  const RunConfig c = config.resolved();
  if (fs::is_directory(c.corpus_dir)) {
    for (const auto& entry : fs::directory_iterator(c.corpus_dir)) {
      if (entry.path().extension() == ".txt") {
        throw std::invalid_argument("corpus directory " + c.corpus_dir.string() +
                                    " already holds documents; choose an empty corpus_dir");
      }
    }
  }
  const SynthCorpus corpus = synth_generate(c.synth);
  for (const auto& doc : corpus.documents) write_brat(doc, c.corpus_dir);
  {
    auto out = open_output(c.embeddings);
    write_embeddings(out, corpus.embeddings);
  }
  const CorpusSplit split = stratified_split(corpus.documents, c.split_ratios, c.seed);
  write_manifest(c.manifest, split);

  const auto by_split = histograms_by_split(split);
  {
    auto out = open_output(c.out_dir / "scope_lengths.tsv");
    write_histogram_tsv(out, by_split);
  }
  {
    auto out = open_output(c.out_dir / "scope_length_stats.tsv");
    write_length_stats_tsv(out, by_split);
  }
  log << "synth: " << corpus.documents.size() << " documents (" << split[Split::Train].size()
      << " train / " << split[Split::Val].size() << " val / " << split[Split::Test].size()
      << " test), vocabulary " << corpus.embeddings.rows() << " -> " << c.corpus_dir.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  const RunConfig c = config.resolved();
  const CorpusSplit split = load_corpus_split(c);
  const EmbeddingTable table = load_table(c, c.model.embedding_dim, log);
  {
    auto out = open_output(c.out_dir / "run_config.txt");
    write_config(out, config);
  }

  SpanNetwork<float> network(c.model);
  auto log_file = open_output(c.out_dir / "train_log.tsv");
  log_file << "epoch\tbox_loss\tclass_loss\ttotal\tval_macro_f1\n";
  const auto result = train(network, split[Split::Train], split[Split::Val], table, c.train,
                            [&](const EpochLog& e) {
                              const std::string f1 = e.val_macro_f1 < 0 ? "NA" : fixed(e.val_macro_f1);
                              log_file << e.epoch << '\t' << fixed(e.box_loss, 8) << '\t'
                                       << fixed(e.class_loss, 8) << '\t' << fixed(e.total, 8) << '\t'
                                       << f1 << '\n';
                              log_file.flush();
                              log << "epoch " << e.epoch << " loss " << fixed(e.total) << " val_macro_f1 "
                                  << f1 << '\n';
                            });
  save_checkpoint(c.checkpoint.string(), network, c.seed);
  log << "train: " << result.log.size() << " epochs" << (result.stopped_early ? " (stopped early)" : "")
      << ", checkpoint " << c.checkpoint.string() << '\n';
  return 0;
}

int cmd_predict(const RunConfig& config, std::ostream& log) {
  const RunConfig c = config.resolved();
  const SpanNetwork<float> network = load_network(c.checkpoint.string());
  const EmbeddingTable table = load_table(c, network.config().embedding_dim, log);
  const std::vector<Document> docs = select_split(load_corpus_split(c), c.predict_split);
  auto out = open_output(c.predictions);
  std::size_t boxes = 0;
  for (const auto& doc : docs) {
    const DocumentPrediction pred = predict_document(network, table, doc, c.decode);
    boxes += pred.boxes.size();
    write_prediction(out, pred);
  }
  log << "predict: " << docs.size() << " documents, " << boxes << " spans -> " << c.predictions.string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  const RunConfig c = config.resolved();
  const std::vector<DocumentPrediction> preds = read_predictions(c.predictions.string());
  const std::vector<Document> docs = select_split(load_corpus_split(c), c.predict_split);
  const EvalReport report = evaluate_predictions(preds, docs);

  std::map<std::string, const DocumentPrediction*> by_id;
  for (const auto& p : preds) by_id[p.doc_id] = &p;
  std::vector<std::vector<LabeledSpan>> pred_spans;
  std::vector<std::vector<LabeledSpan>> gold_spans;
  for (const auto& doc : docs) {
    pred_spans.push_back(by_id.at(doc.id)->spans());
    gold_spans.push_back(doc.gold);
  }
  {
    auto out = open_output(c.out_dir / "eval_report.txt");
    write_report_table(out, report);
  }
  {
    auto out = open_output(c.out_dir / "eval_report.tsv");
    write_report_tsv(out, report);
  }
  {
    auto out = open_output(c.out_dir / "iou_by_length.tsv");
    write_iou_by_length_tsv(out, iou_by_scope_length(pred_spans, gold_spans));
  }
  write_report_table(log, report);
  return 0;
}

int cmd_gradcheck(const RunConfig& config, std::ostream& log) {
  const RunConfig c = config.resolved();
  const GradientCheckResult r = model_gradient_check(c.gradcheck);
  const bool ok = r.max_relative_error < c.gradcheck_tolerance;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "gradcheck: max relative error %.3e at %s[%zu] (analytic %.6e, numeric %.6e), "
                "%zu entries, tolerance %.1e: %s\n",
                r.max_relative_error, r.worst_parameter.c_str(), r.worst_index, r.worst_analytic,
                r.worst_numeric, r.entries_checked, c.gradcheck_tolerance, ok ? "ok" : "FAILED");
  log << buf;
  return ok ? 0 : kExitGradcheckFailed;
}

int cmd_sweep_gamma(const RunConfig& config, std::ostream& log) {
  const RunConfig c = config.resolved();
  const SpanNetwork<float> network = load_network(c.checkpoint.string());
  const EmbeddingTable table = load_table(c, network.config().embedding_dim, log);
  const std::vector<Document> docs = select_split(load_corpus_split(c), c.sweep_split);
  if (docs.empty()) throw std::invalid_argument("split '" + c.sweep_split + "' is empty");

  std::vector<DocumentGrids> grids;
  grids.reserve(docs.size());
  for (const auto& doc : docs) grids.push_back(infer_document(network, table, doc));

  auto out = open_output(c.out_dir / "gamma_sweep.tsv");
  out << "gamma\tmacro_f1\tboxes\tboxes_per_document\n";
  double best_f1 = -1.0;
  double best_gamma = 0.0;
  for (double gamma : c.gamma_grid) {
    std::vector<DocumentPrediction> preds;
    std::size_t boxes = 0;
    for (const auto& g : grids) {
      preds.push_back(decode_document(g, DecodeConfig{gamma}));
      boxes += preds.back().boxes.size();
    }
    const double f1 = evaluate_predictions(preds, docs).macro_f1;
    out << fixed(gamma, 4) << '\t' << fixed(f1) << '\t' << boxes << '\t'
        << fixed(static_cast<double>(boxes) / static_cast<double>(docs.size()), 4) << '\n';
    log << "gamma " << fixed(gamma, 4) << " macro_f1 " << fixed(f1) << " boxes " << boxes << '\n';
    if (f1 > best_f1) {
      best_f1 = f1;
      best_gamma = gamma;
    }
  }
  log << "sweep-gamma: best gamma " << fixed(best_gamma, 4) << " (macro_f1 " << fixed(best_f1) << ")\n";
  return 0;
}

}  // namespace scopeloc
