#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scopeloc/model.hpp"
#include "scopeloc/span.hpp"

namespace scopeloc {

/// A token and its byte interval [begin, end) in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<LabeledSpan> gold;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> token_texts() const;
  /// Throws if any gold span falls outside [0, T-1].
  void check_spans() const;
};

/// Whitespace split, then every leading and trailing ASCII punctuation
/// character becomes its own token.
std::vector<Token> tokenize(std::string_view text);

/// Builds a document from a BRAT .txt/.ann pair. Only text-bound ("T")
/// annotations are read; their token span covers every token that overlaps
/// the annotated byte range.
Document parse_brat(const std::string& id, std::string_view text, std::string_view annotations);
Document read_brat(const std::filesystem::path& txt, const std::filesystem::path& ann);

/// .ann content for the document's gold spans (one T line each).
std::string serialize_brat(const Document& doc);
void write_brat(const Document& doc, const std::filesystem::path& dir);

/// Reads every <id>.txt / <id>.ann pair in a directory, sorted by id.
std::vector<Document> read_corpus(const std::filesystem::path& dir);

/// Long documents are cut after sentence-final punctuation (never inside a
/// gold span when avoidable) so that every piece has at most max_tokens tokens.
/// Pieces are named "<id>#<k>".
std::vector<Document> split_long_document(const Document& doc, std::size_t max_tokens);

// Embedding text format: first line "V D", then V lines "word v1 ... vD".
// A row for the literal token "unk" is the unknown vector; without one, a
// zero row named "unk" is appended. Duplicated words keep the last row.
struct EmbeddingLoadResult {
  EmbeddingTable table;
  std::vector<std::string> warnings;
};

EmbeddingLoadResult parse_embeddings(std::istream& in, const std::string& source = "<stream>");
EmbeddingLoadResult load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

enum class Split { Train = 0, Val = 1, Test = 2 };
std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

struct CorpusSplit {
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  std::array<std::vector<Document>, 3> parts;

  std::vector<Document>& operator[](Split s) { return parts[static_cast<std::size_t>(s)]; }
  const std::vector<Document>& operator[](Split s) const { return parts[static_cast<std::size_t>(s)]; }
};

/// Document counts per split: floor(ratio * n), leftovers to the largest remainders.
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios);

/// Greedy iterative stratification over labeled-span counts. Part sizes equal split_sizes().
CorpusSplit stratified_split(const std::vector<Document>& documents, std::array<double, 3> ratios,
                             std::uint64_t seed);

/// Manifest: one "doc_id<TAB>split" line per document, split in {train, val, test}.
void write_manifest(const std::filesystem::path& path, const CorpusSplit& split);
std::map<std::string, Split> read_manifest(const std::filesystem::path& path);
CorpusSplit apply_manifest(const std::vector<Document>& documents,
                           const std::map<std::string, Split>& manifest);

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t documents = 620;
  /// Relative frequency of classes 1..6 among generated scopes.
  std::array<double, 6> class_mix{1, 1, 1, 1, 1, 1};
  std::size_t embedding_dim = 50;
  std::size_t min_tokens = 10;
  std::size_t max_tokens = 60;
  std::size_t max_scope = 20;
};

struct SynthCorpus {
  std::vector<Document> documents;
  EmbeddingTable embeddings;
};

/// Template-grammar corpus: each class is introduced by its own cue phrases,
/// scopes are runs of concept words with geometric lengths in 1..max_scope.
SynthCorpus synth_generate(const SynthOptions& options);

}  // namespace scopeloc
