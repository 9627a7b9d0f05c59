#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "qdtm/corpus.hpp"

namespace qdtm {

// Dense vectors for the subset of the vocabulary that has one.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t vocabulary_size, std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t vocabulary_size() const { return present_.size(); }

  bool has(WordId word) const { return word < present_.size() && present_[word] != 0; }
  std::span<const double> vector(WordId word) const;
  void set(WordId word, std::span<const double> values);

  std::size_t covered() const { return covered_; }
  // Share of the vocabulary with a vector.
  double coverage() const;

 private:
  std::size_t dimension_ = 0;
  std::vector<double> data_;
  std::vector<char> present_;
  std::size_t covered_ = 0;
};

// Whitespace-separated text vectors: an optional "count dim" header, then
// one "token v1 ... vd" line per word. Lines for out-of-vocabulary tokens
// are validated and skipped.
EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocabulary);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const Vocabulary& vocabulary);

// Throws ParameterError on dimension mismatch or a zero-norm input.
double cosine(std::span<const double> a, std::span<const double> b);

// Mean of the vectors of the given words that have one; empty if none do.
std::vector<double> mean_vector(const EmbeddingTable& table, std::span<const WordId> words);

// Pairs (word, concept) whose cosine reaches the threshold.
class RelatednessMatrix {
 public:
  struct Entry {
    WordId word;
    WordId concept_word;
    double cosine;
  };

  RelatednessMatrix() = default;
  RelatednessMatrix(std::vector<Entry> entries, std::vector<WordId> concepts,
                    double threshold);

  // Sorted by (word, concept_word).
  const std::vector<Entry>& entries() const { return entries_; }
  std::span<const Entry> row(WordId word) const;
  const std::vector<WordId>& concepts() const { return concepts_; }
  double threshold() const { return threshold_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(WordId word, WordId concept_word) const;

 private:
  std::vector<Entry> entries_;
  std::vector<WordId> concepts_;
  double threshold_ = 0.0;
};

inline constexpr double kDefaultRelatednessThreshold = 0.5;
inline constexpr double kDefaultPromotionWeight = 0.3;

// Every (vocabulary word, concept) pair with cosine >= tau, plus the self
// pair of every concept that has a vector. Concepts without a vector are
// skipped with a warning.
RelatednessMatrix build_relatedness(const EmbeddingTable& table,
                                    std::span<const WordId> concepts, double tau);

// Promotion amounts: 1 on self pairs, u on cross pairs, absent otherwise.
class PromotionMatrix {
 public:
  struct Entry {
    WordId word;
    WordId concept_word;
    double amount;
  };

  PromotionMatrix() = default;
  PromotionMatrix(std::vector<Entry> entries, double weight);

  const std::vector<Entry>& entries() const { return entries_; }
  std::span<const Entry> row(WordId word) const;
  // 0 for pairs outside the relatedness matrix.
  double amount(WordId word, WordId concept_word) const;
  // Sum of the word's row.
  double row_sum(WordId word) const;
  bool has_self_pair(WordId word) const { return amount(word, word) == 1.0; }
  double weight() const { return weight_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
  double weight_ = kDefaultPromotionWeight;
};

PromotionMatrix build_promotion(const RelatednessMatrix& relatedness, double u);

}  // namespace qdtm
