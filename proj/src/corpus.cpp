// Embedding files, stratified splitting and split manifests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "scopeloc/data.hpp"
#include "scopeloc/rng.hpp"

namespace scopeloc {

namespace fs = std::filesystem;

EmbeddingLoadResult parse_embeddings(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw std::invalid_argument(source + ": empty embedding file");
  std::istringstream header(line);
  std::size_t vocab = 0;
  std::size_t dim = 0;
  if (!(header >> vocab >> dim) || dim == 0) {
    throw std::invalid_argument(source + " line 1: expected header 'V D'");
  }

  EmbeddingLoadResult result;
  std::vector<std::string> words;
  std::vector<float> vectors;
  std::unordered_map<std::string, std::size_t> seen;
  words.reserve(vocab + 1);
  vectors.reserve((vocab + 1) * dim);

  std::vector<float> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    row.clear();
    std::string value;
    while (fields >> value) {
      try {
        std::size_t used = 0;
        row.push_back(std::stof(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw std::invalid_argument(source + " line " + std::to_string(line_no) +
                                    ": bad value '" + value + "'");
      }
    }
    if (row.size() != dim) {
      throw std::invalid_argument(source + " line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(dim) + " values, found " +
                                  std::to_string(row.size()));
    }
    if (const auto it = seen.find(word); it != seen.end()) {
      result.warnings.push_back(source + " line " + std::to_string(line_no) + ": duplicate word '" +
                                word + "', keeping the later vector");
      std::copy(row.begin(), row.end(), vectors.begin() + static_cast<long>(it->second * dim));
      continue;
    }
    seen.emplace(word, words.size());
    words.push_back(word);
    vectors.insert(vectors.end(), row.begin(), row.end());
  }
  if (words.size() != vocab) {
    result.warnings.push_back(source + ": header promises " + std::to_string(vocab) +
                              " words, file has " + std::to_string(words.size()) + " distinct");
  }

  std::size_t unk = 0;
  if (const auto it = seen.find("unk"); it != seen.end()) {
    unk = it->second;
  } else {
    unk = words.size();
    words.emplace_back("unk");
    vectors.insert(vectors.end(), dim, 0.0f);
  }
  result.table = EmbeddingTable(std::move(words), std::move(vectors), dim, unk);
  return result;
}

EmbeddingLoadResult load_embeddings(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings " + path.string());
  return parse_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.rows() << ' ' << table.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << table.words()[i];
    const float* v = table.row(i);
    for (std::size_t d = 0; d < table.dim(); ++d) {
      std::snprintf(buf, sizeof buf, " %.6f", static_cast<double>(v[d]));
      out << buf;
    }
    out << '\n';
  }
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rest{};
  std::size_t used = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double exact = ratios[j] * static_cast<double>(n);
    sizes[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rest[j] = exact - static_cast<double>(sizes[j]);
    used += sizes[j];
  }
  while (used < n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < 3; ++j) {
      if (rest[j] > rest[best] + 1e-12) best = j;
    }
    ++sizes[best];
    rest[best] = -1.0;
    ++used;
  }
  return sizes;
}

CorpusSplit stratified_split(const std::vector<Document>& documents, std::array<double, 3> ratios,
                             std::uint64_t seed) {
  constexpr std::size_t kSplits = 3;
  constexpr double kTie = 1e-9;
  if (documents.size() < kSplits) {
    throw std::invalid_argument("stratified split needs at least 3 documents, got " +
                                std::to_string(documents.size()));
  }
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("split ratios must sum to 1");

  const std::size_t n = documents.size();
  constexpr std::size_t kClasses = kNumAssertionClasses + 1;
  std::vector<std::array<double, kClasses>> counts(n);
  std::array<double, kClasses> totals{};
  std::set<std::string> ids;
  for (std::size_t d = 0; d < n; ++d) {
    if (!ids.insert(documents[d].id).second) {
      throw std::invalid_argument("duplicate document id " + documents[d].id);
    }
    counts[d].fill(0.0);
    for (const auto& g : documents[d].gold) counts[d][class_index(g.class_id)] += 1.0;
    for (std::size_t c = 1; c < kClasses; ++c) totals[c] += counts[d][c];
  }

  std::array<std::array<double, kClasses>, kSplits> demand{};
  std::array<double, kSplits> capacity{};
  for (std::size_t j = 0; j < kSplits; ++j) {
    capacity[j] = ratios[j] * static_cast<double>(n);
    for (std::size_t c = 1; c < kClasses; ++c) demand[j][c] = ratios[j] * totals[c];
  }

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  std::vector<int> assigned(n, -1);
  std::array<double, kClasses> remaining = totals;

  auto pick = [&](const std::array<double, kSplits>& primary) {
    std::vector<std::size_t> best;
    for (std::size_t j = 0; j < kSplits; ++j) {
      if (best.empty() || primary[j] > primary[best[0]] + kTie) {
        best = {j};
      } else if (std::abs(primary[j] - primary[best[0]]) <= kTie) {
        best.push_back(j);
      }
    }
    if (best.size() > 1) {
      std::vector<std::size_t> by_capacity;
      for (std::size_t j : best) {
        if (by_capacity.empty() || capacity[j] > capacity[by_capacity[0]] + kTie) {
          by_capacity = {j};
        } else if (std::abs(capacity[j] - capacity[by_capacity[0]]) <= kTie) {
          by_capacity.push_back(j);
        }
      }
      best = std::move(by_capacity);
    }
    return best.size() == 1 ? best[0] : best[rng.index(best.size())];
  };

  auto assign = [&](std::size_t d, std::size_t j) {
    assigned[d] = static_cast<int>(j);
    capacity[j] -= 1.0;
    for (std::size_t c = 1; c < kClasses; ++c) {
      demand[j][c] -= counts[d][c];
      remaining[c] -= counts[d][c];
    }
  };

  while (true) {
    std::size_t rarest = 0;
    for (std::size_t c = 1; c < kClasses; ++c) {
      if (remaining[c] > 0.0 && (rarest == 0 || remaining[c] < remaining[rarest])) rarest = c;
    }
    if (rarest == 0) break;
    for (std::size_t d : order) {
      if (assigned[d] >= 0 || counts[d][rarest] == 0.0) continue;
      std::array<double, kSplits> want{};
      for (std::size_t j = 0; j < kSplits; ++j) want[j] = demand[j][rarest];
      assign(d, pick(want));
    }
  }
  for (std::size_t d : order) {
    if (assigned[d] < 0) assign(d, pick(capacity));
  }

  // Split sizes follow the ratios exactly (largest remainder); documents with
  // the fewest spans move first so the label balance is disturbed least.
  const auto target = split_sizes(n, ratios);
  std::array<std::size_t, kSplits> size{};
  for (int j : assigned) ++size[static_cast<std::size_t>(j)];
  std::vector<std::size_t> by_weight = order;
  std::stable_sort(by_weight.begin(), by_weight.end(), [&](std::size_t a, std::size_t b) {
    return documents[a].gold.size() < documents[b].gold.size();
  });
  for (std::size_t to = 0; to < kSplits; ++to) {
    for (std::size_t d : by_weight) {
      if (size[to] >= target[to]) break;
      const auto from = static_cast<std::size_t>(assigned[d]);
      if (size[from] <= target[from]) continue;
      assigned[d] = static_cast<int>(to);
      --size[from];
      ++size[to];
    }
  }

  CorpusSplit split;
  split.ratios = ratios;
  for (std::size_t d = 0; d < n; ++d) {
    split.parts[static_cast<std::size_t>(assigned[d])].push_back(documents[d]);
  }
  return split;
}

void write_manifest(const fs::path& path, const CorpusSplit& split) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << "doc_id\tsplit\n";
  for (std::size_t j = 0; j < split.parts.size(); ++j) {
    for (const auto& doc : split.parts[j]) {
      out << doc.id << '\t' << split_name(static_cast<Split>(j)) << '\n';
    }
  }
}

std::map<std::string, Split> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::map<std::string, Split> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line == "doc_id\tsplit")) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument(path.string() + " line " + std::to_string(line_no) +
                                  ": expected 'doc_id<TAB>split'");
    }
    const std::string id = line.substr(0, tab);
    if (!out.emplace(id, split_from_name(line.substr(tab + 1))).second) {
      throw std::invalid_argument(path.string() + ": document " + id + " listed twice");
    }
  }
  return out;
}

CorpusSplit apply_manifest(const std::vector<Document>& documents,
                           const std::map<std::string, Split>& manifest) {
  CorpusSplit split;
  for (const auto& doc : documents) {
    const auto it = manifest.find(doc.id);
    if (it == manifest.end()) throw std::invalid_argument("document " + doc.id + " missing from manifest");
    split[it->second].push_back(doc);
  }
  const std::size_t n = documents.size();
  for (std::size_t j = 0; j < 3; ++j) {
    split.ratios[j] = n == 0 ? 0.0 : static_cast<double>(split.parts[j].size()) / static_cast<double>(n);
  }
  return split;
}

}  // namespace scopeloc
