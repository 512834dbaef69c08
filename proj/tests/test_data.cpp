#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "scopeloc/data.hpp"
#include "scopeloc/rng.hpp"

using namespace scopeloc;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scopeloc_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(texts(tokenize("No chest pain.")) == std::vector<std::string>{"No", "chest", "pain", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  \n\t ").empty());
  CHECK(texts(tokenize("(mild), e.g. 5mg")) ==
        std::vector<std::string>{"(", "mild", ")", ",", "e.g", ".", "5mg"});
  CHECK(texts(tokenize("...")) == std::vector<std::string>{".", ".", "."});

  const std::string text = "Findings:  no   aneurysm;\nconsider (CT) follow-up.";
  for (const auto& tok : tokenize(text)) {
    CHECK(text.substr(tok.begin, tok.end - tok.begin) == tok.text);
  }
}

TEST_CASE("BRAT parsing") {
  const std::string text = "There is no chest pain today.";
  // tokens: There(0) is(1) no(2) chest(3) pain(4) today(5) .(6)
  SUBCASE("exact token cover") {
    const Document d = parse_brat("d", text, "T1\tAbsent 12 22\tchest pain\n");
    REQUIRE(d.gold.size() == 1);
    CHECK(d.gold[0] == LabeledSpan{TokenSpan(3, 4), AssertionClass::Absent});
  }
  SUBCASE("partial token overlap includes the token") {
    const Document d = parse_brat("d", text, "T1\tPresent 14 19\test p\n");
    CHECK(d.gold[0].span == TokenSpan(3, 4));
  }
  SUBCASE("other annotation kinds are ignored") {
    const Document d = parse_brat("d", text, "R1\tRel Arg1:T1 Arg2:T2\n#1\tNote T1\tx\nA1\tNeg T1\n");
    CHECK(d.gold.empty());
  }
  SUBCASE("errors carry the location") {
    CHECK_THROWS_WITH(parse_brat("d", text, "T1\tAbsent 12 15;16 22\tches pain\n"),
                      doctest::Contains("discontinuous"));
    CHECK_THROWS_WITH(parse_brat("d", text, "T1\tNegated 12 22\tchest pain\n"), doctest::Contains("line 1"));
    CHECK_THROWS_WITH(parse_brat("d", text, "\nT1\tAbsent 12 99\tchest pain\n"), doctest::Contains("line 2"));
    CHECK_THROWS_WITH(parse_brat("d", text, "T1\tAbsent 12 22\tchest pains\n"), doctest::Contains("surface"));
    CHECK_THROWS(parse_brat("d", "a  b", "T1\tAbsent 1 2\t \n"));
    CHECK_THROWS(parse_brat("d", text, "T1\tAbsent x 22\tchest pain\n"));
  }
}

TEST_CASE("character spans map to tokens by overlap") {
  Rng rng(19);
  const std::vector<std::string> words = {"no", "pain", "(mild)", "ct,", "x", "aneurysm."};
  for (int rep = 0; rep < 100; ++rep) {
    std::string text;
    for (std::size_t k = 3 + rng.index(10); k > 0; --k) {
      text += words[rng.index(words.size())];
      text += rng.index(3) == 0 ? "\n" : " ";
    }
    const auto tokens = tokenize(text);
    const std::size_t b = rng.index(text.size() - 1);
    const std::size_t e = b + 1 + rng.index(std::min<std::size_t>(10, text.size() - b - 1) + 1);
    std::string surface = text.substr(b, e - b);
    std::replace(surface.begin(), surface.end(), '\n', ' ');
    std::vector<std::size_t> covered;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      for (std::size_t ch = b; ch < e; ++ch) {
        if (tokens[t].begin <= ch && ch < tokens[t].end) {
          covered.push_back(t);
          break;
        }
      }
    }
    const std::string ann = "T1\tPresent " + std::to_string(b) + " " + std::to_string(e) + "\t" + surface + "\n";
    if (covered.empty()) {
      CHECK_THROWS(parse_brat("r", text, ann));
      continue;
    }
    const Document d = parse_brat("r", text, ann);
    CHECK(d.gold[0].span == TokenSpan(covered.front(), covered.back()));
  }
}

TEST_CASE("BRAT serialization is a fixed point") {
  const std::string text = "Mother had breast cancer.\nNo chest pain; consider stress test.";
  const std::string ann =
      "T1\tAWSE 11 24\tbreast cancer\nT2\tAbsent 29 39\tchest pain\nT3\tConditional 50 61\tstress test\n";
  const Document a = parse_brat("doc", text, ann);
  const Document b = parse_brat("doc", text, serialize_brat(a));
  CHECK(a.gold == b.gold);
  CHECK(serialize_brat(a) == serialize_brat(b));

  const fs::path dir = scratch("brat");
  write_brat(a, dir);
  const auto corpus = read_corpus(dir);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].id == "doc");
  CHECK(corpus[0].text == text);
  CHECK(corpus[0].gold == a.gold);
  fs::remove_all(dir);
  CHECK_THROWS(read_corpus(dir));
}

TEST_CASE("long documents are split without losing tokens") {
  Document d;
  d.id = "long";
  d.text = "a b c . d e f . g h i j k .";
  d.tokens = tokenize(d.text);
  d.gold = {{TokenSpan(4, 6), AssertionClass::Present}, {TokenSpan(8, 11), AssertionClass::Absent}};
  const auto pieces = split_long_document(d, 5);
  std::size_t total = 0;
  for (const auto& p : pieces) {
    CHECK(p.size() <= 5);
    CHECK(p.size() >= 1);
    p.check_spans();
    total += p.size();
  }
  CHECK(total == d.size());
  CHECK(pieces[0].id == "long#0");
  CHECK(pieces[0].token_texts() == std::vector<std::string>{"a", "b", "c", "."});
  CHECK(split_long_document(d, 100).size() == 1);
}

TEST_CASE("embedding files") {
  SUBCASE("two words, no unk row") {
    std::istringstream in("2 3\nfoo 1 2 3\nbar 4 5 6\n");
    const auto r = parse_embeddings(in);
    CHECK(r.table.rows() == 3);
    CHECK(r.table.dim() == 3);
    CHECK(r.table.lookup("missing") == r.table.unk_index());
    CHECK(r.table.row(r.table.lookup("bar"))[2] == 6.0f);
    CHECK(r.warnings.empty());
  }
  SUBCASE("explicit unk row and duplicates") {
    std::istringstream in("3 2\nunk 9 9\nfoo 1 2\nfoo 3 4\n");
    const auto r = parse_embeddings(in);
    CHECK(r.table.rows() == 2);
    CHECK(r.table.row(r.table.lookup("foo"))[0] == 3.0f);
    CHECK(r.table.row(r.table.lookup("zzz"))[0] == 9.0f);
    REQUIRE(r.warnings.size() >= 1);
    CHECK(r.warnings[0].find("duplicate") != std::string::npos);
  }
  SUBCASE("malformed rows name the line") {
    std::istringstream short_row("2 3\nfoo 1 2 3\nbar 4 5\n");
    CHECK_THROWS_WITH(parse_embeddings(short_row, "e.txt"), doctest::Contains("e.txt line 3"));
    std::istringstream bad_value("1 2\nfoo 1 x\n");
    CHECK_THROWS(parse_embeddings(bad_value));
    std::istringstream no_header("");
    CHECK_THROWS(parse_embeddings(no_header));
  }
  SUBCASE("written tables reload identically and every word maps to its vector") {
    const SynthCorpus c = synth_generate(SynthOptions{3, 5});
    std::stringstream ss;
    write_embeddings(ss, c.embeddings);
    const auto r = parse_embeddings(ss);
    CHECK(r.table.words() == c.embeddings.words());
    CHECK(r.table.vectors() == c.embeddings.vectors());
  }
}

TEST_CASE("split sizes") {
  CHECK(split_sizes(620, {500.0 / 620, 60.0 / 620, 60.0 / 620}) == std::array<std::size_t, 3>{500, 60, 60});
  CHECK(split_sizes(10, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(split_sizes(7, {1.0 / 3, 1.0 / 3, 1.0 / 3}) == std::array<std::size_t, 3>{3, 2, 2});
}

TEST_CASE("stratified split") {
  const auto corpus = synth_generate(SynthOptions{5, 500}).documents;
  const std::array<double, 3> ratios{0.8, 0.1, 0.1};
  const CorpusSplit a = stratified_split(corpus, ratios, 11);
  const CorpusSplit b = stratified_split(corpus, ratios, 11);

  std::set<std::string> seen;
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(a.parts[j].size() == b.parts[j].size());
    for (std::size_t i = 0; i < a.parts[j].size(); ++i) CHECK(a.parts[j][i].id == b.parts[j][i].id);
    for (const auto& d : a.parts[j]) CHECK(seen.insert(d.id).second);
  }
  CHECK(seen.size() == corpus.size());
  CHECK(a[Split::Train].size() == 400);
  CHECK(a[Split::Val].size() == 50);
  CHECK(a[Split::Test].size() == 50);

  std::map<int, double> total;
  std::map<int, double> train;
  for (const auto& d : corpus) {
    for (const auto& g : d.gold) total[class_index(g.class_id)] += 1;
  }
  for (const auto& d : a[Split::Train]) {
    for (const auto& g : d.gold) train[class_index(g.class_id)] += 1;
  }
  for (int c = 1; c <= 6; ++c) {
    CHECK(std::abs(train[c] / total[c] - 0.8) <= 0.05);
  }

  SUBCASE("single-class documents") {
    std::vector<Document> docs;
    for (int i = 0; i < 23; ++i) {
      Document d;
      d.id = "d" + std::to_string(100 + i);
      d.tokens = tokenize("a b c");
      d.gold = {{TokenSpan(0, 1), AssertionClass::Absent}};
      docs.push_back(d);
    }
    const CorpusSplit s = stratified_split(docs, {0.6, 0.2, 0.2}, 4);
    CHECK(std::abs(static_cast<double>(s[Split::Train].size()) - 0.6 * 23) <= 1.0);
    CHECK(std::abs(static_cast<double>(s[Split::Val].size()) - 0.2 * 23) <= 1.0);
    CHECK(std::abs(static_cast<double>(s[Split::Test].size()) - 0.2 * 23) <= 1.0);
  }
  SUBCASE("rejected inputs") {
    CHECK_THROWS(stratified_split(std::vector<Document>(corpus.begin(), corpus.begin() + 2), ratios, 1));
    CHECK_THROWS(stratified_split(corpus, {0.5, 0.5, 0.0}, 1));
    CHECK_THROWS(stratified_split(corpus, {0.5, 0.3, 0.3}, 1));
    std::vector<Document> dup(corpus.begin(), corpus.begin() + 4);
    dup[1].id = dup[0].id;
    CHECK_THROWS(stratified_split(dup, ratios, 1));
  }
}

TEST_CASE("split manifests") {
  const auto corpus = synth_generate(SynthOptions{2, 40}).documents;
  const CorpusSplit s = stratified_split(corpus, {0.5, 0.25, 0.25}, 3);
  const fs::path dir = scratch("manifest");
  write_manifest(dir / "split.tsv", s);
  const CorpusSplit back = apply_manifest(corpus, read_manifest(dir / "split.tsv"));
  for (std::size_t j = 0; j < 3; ++j) {
    std::set<std::string> x;
    std::set<std::string> y;
    for (const auto& d : s.parts[j]) x.insert(d.id);
    for (const auto& d : back.parts[j]) y.insert(d.id);
    CHECK(x == y);
  }
  std::ofstream(dir / "bad.tsv") << "doc_id\tsplit\nsynth00000\tdev\n";
  CHECK_THROWS(read_manifest(dir / "bad.tsv"));
  std::ofstream(dir / "partial.tsv") << "doc_id\tsplit\nsynth00000\ttrain\n";
  CHECK_THROWS(apply_manifest(corpus, read_manifest(dir / "partial.tsv")));
  fs::remove_all(dir);
}

TEST_CASE("synthetic corpus") {
  SynthOptions opt;
  opt.seed = 9;
  opt.documents = 200;
  const SynthCorpus a = synth_generate(opt);
  const SynthCorpus b = synth_generate(opt);
  REQUIRE(a.documents.size() == 200);
  for (std::size_t i = 0; i < a.documents.size(); ++i) {
    CHECK(a.documents[i].text == b.documents[i].text);
    CHECK(a.documents[i].gold == b.documents[i].gold);
  }
  CHECK(a.embeddings.vectors() == b.embeddings.vectors());

  for (const auto& d : a.documents) {
    CHECK(d.size() >= opt.min_tokens);
    CHECK(d.size() <= opt.max_tokens);
    d.check_spans();
    for (std::size_t k = 0; k < d.gold.size(); ++k) {
      CHECK(d.gold[k].span.length() >= 1);
      CHECK(d.gold[k].span.length() <= 20);
      if (k > 0) CHECK(d.gold[k - 1].span.end < d.gold[k].span.start);
    }
    // The text reparses to the same tokens and gold.
    const Document re = parse_brat(d.id, d.text, serialize_brat(d));
    CHECK(re.tokens == d.tokens);
    CHECK(re.gold == d.gold);
  }

  SUBCASE("class frequencies follow the requested mix") {
    SynthOptions big;
    big.seed = 3;
    big.documents = 2500;
    big.class_mix = {4, 2, 1, 1, 1, 1};
    std::array<double, 7> counts{};
    double n = 0;
    for (const auto& d : synth_generate(big).documents) {
      for (const auto& g : d.gold) {
        counts[static_cast<std::size_t>(class_index(g.class_id))] += 1;
        n += 1;
      }
    }
    REQUIRE(n >= 1e4);
    for (std::size_t c = 1; c <= 6; ++c) CHECK(std::abs(counts[c] / n - big.class_mix[c - 1] / 10.0) <= 0.02);
  }
  SUBCASE("bad options") {
    SynthOptions bad;
    bad.class_mix = {0, 0, 0, 0, 0, 0};
    CHECK_THROWS(synth_generate(bad));
    bad = SynthOptions{};
    bad.documents = 0;
    CHECK_THROWS(synth_generate(bad));
  }
}
