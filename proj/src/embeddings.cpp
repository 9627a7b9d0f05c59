#include "qdtm/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "qdtm/error.hpp"

namespace qdtm {

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_count(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

template <typename Entry>
std::span<const Entry> row_of(const std::vector<Entry>& entries, WordId word) {
  auto lo = std::lower_bound(entries.begin(), entries.end(), word,
                             [](const Entry& e, WordId w) { return e.word < w; });
  auto hi = std::upper_bound(lo, entries.end(), word,
                             [](WordId w, const Entry& e) { return w < e.word; });
  return {lo, hi};
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t vocabulary_size, std::size_t dimension)
    : dimension_(dimension), data_(vocabulary_size * dimension, 0.0), present_(vocabulary_size, 0) {
  if (dimension == 0) throw ParameterError("embedding dimension must be positive");
}

std::span<const double> EmbeddingTable::vector(WordId word) const {
  if (!has(word)) throw LookupError("no embedding for token id " + std::to_string(word));
  return {data_.data() + static_cast<std::size_t>(word) * dimension_, dimension_};
}

void EmbeddingTable::set(WordId word, std::span<const double> values) {
  if (word >= present_.size()) throw LookupError("token id " + std::to_string(word) + " out of range");
  if (values.size() != dimension_) {
    throw ParameterError("embedding has dimension " + std::to_string(values.size()) +
                         ", expected " + std::to_string(dimension_));
  }
  std::copy(values.begin(), values.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(word * dimension_));
  if (!present_[word]) {
    present_[word] = 1;
    ++covered_;
  }
}

double EmbeddingTable::coverage() const {
  if (present_.empty()) return 0.0;
  return static_cast<double>(covered_) / static_cast<double>(present_.size());
}

EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocabulary) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dimension = 0;
  std::vector<std::pair<WordId, std::vector<double>>> rows;
  std::vector<std::string> fields;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    fields.clear();
    std::istringstream ls(line);
    for (std::string f; ls >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;

    if (first_content_line) {
      first_content_line = false;
      if (fields.size() == 2 && parse_count(fields[0]) && parse_count(fields[1])) {
        dimension = std::stoul(fields[1]);
        if (dimension == 0) throw FormatError("line 1: header declares dimension 0");
        continue;
      }
    }
    if (fields.size() < 2) {
      throw FormatError("line " + std::to_string(line_no) + ": expected a token and a vector");
    }
    const std::size_t d = fields.size() - 1;
    if (dimension == 0) {
      dimension = d;
    } else if (d != dimension) {
      throw FormatError("line " + std::to_string(line_no) + ": vector has dimension " +
                        std::to_string(d) + ", expected " + std::to_string(dimension));
    }
    std::vector<double> values(d);
    for (std::size_t i = 0; i < d; ++i) {
      if (!parse_double(fields[i + 1], values[i])) {
        throw FormatError("line " + std::to_string(line_no) + ": malformed number '" +
                          fields[i + 1] + "'");
      }
    }
    if (auto id = vocabulary.find(fields[0])) rows.emplace_back(*id, std::move(values));
  }

  if (rows.empty()) throw EmptyResultError("embedding file covers no vocabulary token");
  EmbeddingTable table(vocabulary.size(), dimension);
  for (const auto& [id, values] : rows) table.set(id, values);
  spdlog::info("embeddings: {} of {} vocabulary tokens covered ({:.1f}%)", table.covered(),
               vocabulary.size(), 100.0 * table.coverage());
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open embedding file '" + path.string() + "'");
  return load_embeddings(in, vocabulary);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ParameterError("cosine: similarity undefined for a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<double> mean_vector(const EmbeddingTable& table, std::span<const WordId> words) {
  std::vector<double> mean;
  std::size_t n = 0;
  for (WordId w : words) {
    if (!table.has(w)) continue;
    auto v = table.vector(w);
    if (mean.empty()) mean.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
    ++n;
  }
  for (auto& x : mean) x /= static_cast<double>(n);
  return mean;
}

RelatednessMatrix::RelatednessMatrix(std::vector<Entry> entries, std::vector<WordId> concepts,
                                     double threshold)
    : entries_(std::move(entries)), concepts_(std::move(concepts)), threshold_(threshold) {
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.word != b.word ? a.word < b.word : a.concept_word < b.concept_word;
  });
}

std::span<const RelatednessMatrix::Entry> RelatednessMatrix::row(WordId word) const {
  return row_of(entries_, word);
}

bool RelatednessMatrix::contains(WordId word, WordId concept_word) const {
  for (const auto& e : row(word)) {
    if (e.concept_word == concept_word) return true;
  }
  return false;
}

RelatednessMatrix build_relatedness(const EmbeddingTable& table, std::span<const WordId> concepts,
                                    double tau) {
  std::vector<WordId> usable;
  for (WordId c : concepts) {
    if (std::find(usable.begin(), usable.end(), c) != usable.end()) continue;
    if (!table.has(c)) {
      spdlog::warn("concept word id {} has no embedding; excluded from relatedness", c);
      continue;
    }
    usable.push_back(c);
  }

  // Unit vectors make each pair a dot product; zero vectors never relate.
  const std::size_t dim = table.dimension();
  auto unit = [&](WordId w) {
    std::vector<double> u(table.vector(w).begin(), table.vector(w).end());
    double n = 0.0;
    for (double x : u) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return std::vector<double>{};
    for (double& x : u) x /= n;
    return u;
  };
  std::vector<std::vector<double>> concept_units;
  for (WordId c : usable) concept_units.push_back(unit(c));

  std::vector<RelatednessMatrix::Entry> entries;
  for (WordId w = 0; w < table.vocabulary_size(); ++w) {
    if (!table.has(w)) continue;
    const auto uw = unit(w);
    for (std::size_t q = 0; q < usable.size(); ++q) {
      if (usable[q] == w) {
        entries.push_back({w, w, 1.0});
        continue;
      }
      if (uw.empty() || concept_units[q].empty()) continue;
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += uw[i] * concept_units[q][i];
      dot = std::clamp(dot, -1.0, 1.0);
      if (dot >= tau) entries.push_back({w, usable[q], dot});
    }
  }
  return RelatednessMatrix(std::move(entries), std::move(usable), tau);
}

PromotionMatrix::PromotionMatrix(std::vector<Entry> entries, double weight)
    : entries_(std::move(entries)), weight_(weight) {
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.word != b.word ? a.word < b.word : a.concept_word < b.concept_word;
  });
}

std::span<const PromotionMatrix::Entry> PromotionMatrix::row(WordId word) const {
  return row_of(entries_, word);
}

double PromotionMatrix::amount(WordId word, WordId concept_word) const {
  for (const auto& e : row(word)) {
    if (e.concept_word == concept_word) return e.amount;
  }
  return 0.0;
}

double PromotionMatrix::row_sum(WordId word) const {
  double s = 0.0;
  for (const auto& e : row(word)) s += e.amount;
  return s;
}

PromotionMatrix build_promotion(const RelatednessMatrix& relatedness, double u) {
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("promotion weight u must lie in (0, 1)");
  std::vector<PromotionMatrix::Entry> entries;
  entries.reserve(relatedness.size());
  for (const auto& e : relatedness.entries()) {
    entries.push_back({e.word, e.concept_word, e.word == e.concept_word ? 1.0 : u});
  }
  return PromotionMatrix(std::move(entries), u);
}

}  // namespace qdtm
