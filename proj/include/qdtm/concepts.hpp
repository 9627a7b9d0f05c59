#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qdtm/corpus.hpp"
#include "qdtm/embeddings.hpp"
#include "qdtm/retrieval.hpp"

namespace qdtm {

enum class ExpansionMethod { Fre, Kld, Rel };

std::string_view to_string(ExpansionMethod method);
ExpansionMethod parse_expansion_method(std::string_view text);

struct ConceptWord {
  WordId word;
  double score;
};

struct ConceptWordSet {
  std::string query;
  ExpansionMethod method = ExpansionMethod::Kld;
  // Descending by score, ties by ascending id.
  std::vector<ConceptWord> words;

  std::vector<WordId> ids() const;
  bool contains(WordId word) const;
  std::size_t size() const { return words.size(); }
};

struct ExpansionOptions {
  ExpansionMethod method = ExpansionMethod::Kld;
  std::size_t count = 10;
  bool exclude_query_terms = false;
  // Relevance-model / embedding mixture weight.
  double lambda = 0.5;
  // Number of most-similar vocabulary terms kept for sim(w, q).
  std::size_t similarity_cutoff = 100;
};

// Per-word scorers. Each rescans the retrieved documents; the
// vocabulary-wide variants below compute all words in one pass.
double score_fre(const Corpus& corpus, WordId word, const RetrievedSet& retrieved);
double score_kld(const Corpus& corpus, WordId word, const RetrievedSet& retrieved);
double relevance_model_prob(const Corpus& corpus, WordId word, const RetrievedSet& retrieved);
double score_rel(const Corpus& corpus, WordId word, const Query& query,
                 const RetrievedSet& retrieved, const EmbeddingTable& embeddings,
                 double lambda, std::size_t similarity_cutoff);

std::vector<double> fre_scores(const Corpus& corpus, const RetrievedSet& retrieved);
std::vector<double> kld_scores(const Corpus& corpus, const RetrievedSet& retrieved);
// p(w|RM) for every word; sums to 1.
std::vector<double> relevance_model(const Corpus& corpus, const RetrievedSet& retrieved);
// Similarity of every word to the mean query vector, renormalized over the
// top `cutoff` words and zero elsewhere. Empty if the query has no vector.
std::vector<double> query_similarity(const EmbeddingTable& embeddings, const Query& query,
                                     std::size_t cutoff);
std::vector<double> rel_scores(const Corpus& corpus, const Query& query,
                               const RetrievedSet& retrieved, const EmbeddingTable& embeddings,
                               double lambda, std::size_t similarity_cutoff);

// Top-N positive-scoring words for the retrieved set. `embeddings` is
// required for REL only.
ConceptWordSet extract_concept_words(const Corpus& corpus, const Query& query,
                                     const RetrievedSet& retrieved,
                                     const ExpansionOptions& options,
                                     const EmbeddingTable* embeddings = nullptr);

// Retrieves, then extracts.
ConceptWordSet extract_concept_words(const Corpus& corpus, const Query& query,
                                     std::size_t cutoff, double mu,
                                     const ExpansionOptions& options,
                                     const EmbeddingTable* embeddings = nullptr);

}  // namespace qdtm
