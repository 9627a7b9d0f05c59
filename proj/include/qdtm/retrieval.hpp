#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "qdtm/corpus.hpp"

namespace qdtm {

enum class QueryMode { And, Or };

std::string_view to_string(QueryMode mode);
QueryMode parse_query_mode(std::string_view text);

struct Query {
  std::string phrase;
  // In-vocabulary terms in phrase order, repeats kept.
  std::vector<WordId> terms;
  // Terms that survived preprocessing but are not in the vocabulary.
  std::vector<std::string> out_of_vocabulary;
  QueryMode mode = QueryMode::Or;
};

// Tokenizes the phrase with the corpus manifest (stopwords included) and
// maps terms to ids. Throws ParameterError if no term is in the vocabulary.
Query make_query(const Corpus& corpus, std::string_view phrase, QueryMode mode);

struct ScoredDocument {
  std::size_t document;
  double log_score;
};

struct RetrievedSet {
  // Descending by log_score, ties by ascending document index.
  std::vector<ScoredDocument> documents;
  std::size_t cutoff = 0;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

inline constexpr double kDefaultSmoothing = 100.0;
inline constexpr std::size_t kDefaultRetrievalCutoff = 200;

// log prod_i (tf(q_i, d) + mu P_C(q_i)) / (|d| + mu). Returns -infinity
// when some factor is zero.
double query_likelihood(const Vocabulary& vocabulary, const Document& document,
                        const Query& query, double mu);

// True if the document passes the AND/OR membership rule.
bool passes_mode(const Document& document, const Query& query);

RetrievedSet retrieve(const Corpus& corpus, const Query& query, std::size_t cutoff,
                      double mu = kDefaultSmoothing);

// |top-K of ranking ∩ relevant| / K.
double precision_at_k(std::span<const std::size_t> ranking,
                      const std::unordered_set<std::size_t>& relevant, std::size_t k);

}  // namespace qdtm
