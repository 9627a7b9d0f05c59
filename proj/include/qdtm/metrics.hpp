#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "qdtm/corpus.hpp"
#include "qdtm/embeddings.hpp"
#include "qdtm/model.hpp"

namespace qdtm {

// Distinct words across all lists over the total list length. Throws
// ParameterError when there is nothing to measure.
double topic_diversity(const std::vector<std::vector<std::string>>& top_words);

// Weighted sum of the embeddings of the first `top_n` words, weights
// renormalized over the words that have a vector. nullopt when none has one.
std::optional<std::vector<double>> topic_embedding(const EmbeddingTable& embeddings,
                                                   const Vocabulary& vocabulary,
                                                   const std::vector<WeightedWord>& top_words,
                                                   std::size_t top_n = 10);

// Cosine between a parent and a subtopic embedding.
double topic_cohesion(const std::vector<double>& parent, const std::vector<double>& subtopic);

inline double overall_quality(double diversity, double cohesion) { return diversity * cohesion; }

// Mean pairwise NPMI of the first `top_n` words with whole-document
// co-occurrence and add-one smoothing. Pairs with a word that never occurs
// are skipped; nullopt when no pair is left.
std::optional<double> npmi_coherence(const Corpus& corpus, const std::vector<WordId>& words,
                                     std::size_t top_n = 10);
std::optional<double> npmi_coherence(const Corpus& corpus, const std::vector<WeightedWord>& words,
                                     std::size_t top_n = 10);

struct SubtopicReport {
  struct Entry {
    std::optional<double> cohesion;
    double prevalence = 0.0;
    std::optional<double> npmi;
  };
  std::string query;
  std::vector<Entry> subtopics;
  double diversity = 0.0;
  // Mean over subtopics with a defined cohesion.
  std::optional<double> cohesion;
  // diversity x mean cohesion.
  std::optional<double> overall;
  std::optional<double> parent_npmi;
};

// `embeddings` may be null; cohesion is then undefined.
SubtopicReport subtopic_report(const QueryResult& result, const Corpus& corpus,
                               const EmbeddingTable* embeddings);

// Documents ranked by descending parent weight, ties by ascending index.
std::vector<std::size_t> rank_by_weight(const std::vector<double>& weights);

}  // namespace qdtm
