#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "scopeloc/data.hpp"

namespace scopeloc {

namespace fs = std::filesystem;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

bool is_sentence_final(const std::string& token) {
  return token == "." || token == "?" || token == "!";
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::size_t parse_offset(std::string_view s, const std::string& where) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw std::invalid_argument(where + ": bad offset '" + std::string(s) + "'");
  }
  return std::stoul(std::string(s));
}

}  // namespace

std::vector<std::string> Document::token_texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

void Document::check_spans() const {
  for (const auto& g : gold) {
    if (g.span.end >= tokens.size()) {
      throw std::out_of_range(id + ": gold span [" + std::to_string(g.span.start) + "," +
                              std::to_string(g.span.end) + "] outside " +
                              std::to_string(tokens.size()) + " tokens");
    }
  }
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  auto single = [&](std::size_t at) { tokens.push_back({std::string(1, text[at]), at, at + 1}); };
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t b = i;
    std::size_t e = i;
    while (e < text.size() && !is_space(text[e])) ++e;
    i = e;

    while (b < e && is_punct(text[b])) single(b++);
    std::size_t core_end = e;
    while (core_end > b && is_punct(text[core_end - 1])) --core_end;
    if (core_end > b) tokens.push_back({std::string(text.substr(b, core_end - b)), b, core_end});
    for (std::size_t k = core_end; k < e; ++k) single(k);
  }
  return tokens;
}

Document parse_brat(const std::string& id, std::string_view text, std::string_view annotations) {
  Document doc;
  doc.id = id;
  doc.text = std::string(text);
  doc.tokens = tokenize(text);

  std::size_t line_no = 0;
  for (std::string_view line : split_fields(annotations, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() != 'T') continue;  // relations, events, notes: ignored
    const std::string where = id + ".ann line " + std::to_string(line_no);

    const auto fields = split_fields(line, '\t');
    if (fields.size() < 2) throw std::invalid_argument(where + ": malformed text-bound annotation");
    const std::string_view body = fields[1];
    if (body.find(';') != std::string_view::npos) {
      throw std::invalid_argument(where + ": discontinuous annotation " + std::string(fields[0]) +
                                  " is not supported");
    }
    const auto parts = split_fields(body, ' ');
    if (parts.size() != 3) throw std::invalid_argument(where + ": expected '<Class> <start> <end>'");
    const auto cls = class_from_name(parts[0]);
    if (!cls || *cls == AssertionClass::None) {
      throw std::invalid_argument(where + ": unknown class '" + std::string(parts[0]) + "'");
    }
    const std::size_t start = parse_offset(parts[1], where);
    const std::size_t end = parse_offset(parts[2], where);
    if (start >= end || end > text.size()) {
      throw std::invalid_argument(where + ": offsets " + std::to_string(start) + "-" +
                                  std::to_string(end) + " outside text of " +
                                  std::to_string(text.size()) + " bytes");
    }
    std::string cited(text.substr(start, end - start));
    std::replace(cited.begin(), cited.end(), '\n', ' ');
    const std::string_view surface = fields.size() > 2 ? fields[2] : std::string_view{};
    if (cited != surface) {
      throw std::invalid_argument(where + ": surface '" + std::string(surface) +
                                  "' does not match text '" + cited + "'");
    }

    std::size_t first = doc.tokens.size();
    std::size_t last = 0;
    for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
      if (doc.tokens[t].begin < end && start < doc.tokens[t].end) {
        first = std::min(first, t);
        last = t;
      }
    }
    if (first == doc.tokens.size()) {
      throw std::invalid_argument(where + ": annotation covers no token");
    }
    doc.gold.push_back({TokenSpan(first, last), *cls});
  }
  doc.check_spans();
  return doc;
}

Document read_brat(const fs::path& txt, const fs::path& ann) {
  const std::string annotations = fs::exists(ann) ? slurp(ann) : std::string{};
  return parse_brat(txt.stem().string(), slurp(txt), annotations);
}

std::string serialize_brat(const Document& doc) {
  std::ostringstream os;
  for (std::size_t k = 0; k < doc.gold.size(); ++k) {
    const auto& g = doc.gold[k];
    const std::size_t b = doc.tokens.at(g.span.start).begin;
    const std::size_t e = doc.tokens.at(g.span.end).end;
    std::string surface = doc.text.substr(b, e - b);
    std::replace(surface.begin(), surface.end(), '\n', ' ');
    os << 'T' << (k + 1) << '\t' << class_name(g.class_id) << ' ' << b << ' ' << e << '\t'
       << surface << '\n';
  }
  return os.str();
}

void write_brat(const Document& doc, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream txt(dir / (doc.id + ".txt"), std::ios::binary | std::ios::trunc);
  std::ofstream ann(dir / (doc.id + ".ann"), std::ios::binary | std::ios::trunc);
  if (!txt || !ann) throw std::runtime_error("cannot write BRAT files for " + doc.id);
  txt << doc.text;
  ann << serialize_brat(doc);
}

std::vector<Document> read_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus directory " + dir.string() + " not found");
  std::vector<fs::path> texts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") texts.push_back(entry.path());
  }
  std::sort(texts.begin(), texts.end());
  std::vector<Document> docs;
  docs.reserve(texts.size());
  for (const auto& txt : texts) {
    fs::path ann = txt;
    ann.replace_extension(".ann");
    docs.push_back(read_brat(txt, ann));
  }
  return docs;
}

namespace {

bool crosses_span(const Document& doc, std::size_t cut) {
  // Cut between token `cut` and `cut + 1`.
  return std::any_of(doc.gold.begin(), doc.gold.end(), [&](const LabeledSpan& g) {
    return g.span.start <= cut && cut < g.span.end;
  });
}

Document slice(const Document& doc, std::size_t first, std::size_t last, std::size_t piece) {
  Document out;
  out.id = doc.id + "#" + std::to_string(piece);
  const std::size_t base = doc.tokens[first].begin;
  out.text = doc.text.substr(base, doc.tokens[last].end - base);
  for (std::size_t t = first; t <= last; ++t) {
    Token tok = doc.tokens[t];
    tok.begin -= base;
    tok.end -= base;
    out.tokens.push_back(std::move(tok));
  }
  for (const auto& g : doc.gold) {
    if (g.span.end < first || g.span.start > last) continue;
    const std::size_t s = std::max(g.span.start, first) - first;
    const std::size_t e = std::min(g.span.end, last) - first;
    out.gold.push_back({TokenSpan(s, e), g.class_id});
  }
  return out;
}

}  // namespace

std::vector<Document> split_long_document(const Document& doc, std::size_t max_tokens) {
  if (max_tokens == 0) throw std::invalid_argument("max_tokens must be positive");
  if (doc.tokens.size() <= max_tokens) return {doc};

  std::vector<Document> pieces;
  std::size_t start = 0;
  while (start < doc.tokens.size()) {
    const std::size_t limit = start + max_tokens - 1;
    if (limit >= doc.tokens.size() - 1) {
      pieces.push_back(slice(doc, start, doc.tokens.size() - 1, pieces.size()));
      break;
    }
    std::size_t cut = limit;
    bool found = false;
    for (std::size_t c = limit + 1; c-- > start;) {
      if (is_sentence_final(doc.tokens[c].text) && !crosses_span(doc, c)) {
        cut = c;
        found = true;
        break;
      }
    }
    if (!found) {
      for (std::size_t c = limit + 1; c-- > start;) {
        if (!crosses_span(doc, c)) {
          cut = c;
          break;
        }
      }
    }
    pieces.push_back(slice(doc, start, cut, pieces.size()));
    start = cut + 1;
  }
  return pieces;
}

}  // namespace scopeloc
