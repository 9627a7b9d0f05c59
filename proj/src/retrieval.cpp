#include "qdtm/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "qdtm/error.hpp"

namespace qdtm {

std::string_view to_string(QueryMode mode) { return mode == QueryMode::And ? "and" : "or"; }

QueryMode parse_query_mode(std::string_view text) {
  if (text == "and" || text == "AND") return QueryMode::And;
  if (text == "or" || text == "OR") return QueryMode::Or;
  throw ParameterError("unknown query mode '" + std::string(text) + "' (expected and|or)");
}

Query make_query(const Corpus& corpus, std::string_view phrase, QueryMode mode) {
  Query q{std::string(phrase), {}, {}, mode};
  const auto stopwords = load_stopwords(corpus.manifest());
  for (auto& tok : tokenize(phrase, corpus.manifest())) {
    if (stopwords.contains(tok)) continue;
    if (auto id = corpus.vocabulary().find(tok)) {
      q.terms.push_back(*id);
    } else {
      q.out_of_vocabulary.push_back(std::move(tok));
    }
  }
  if (q.terms.empty()) {
    throw ParameterError("query '" + q.phrase + "' has no term in the vocabulary");
  }
  if (!q.out_of_vocabulary.empty()) {
    spdlog::warn("query '{}': {} out-of-vocabulary term(s) ignored", q.phrase,
                 q.out_of_vocabulary.size());
  }
  return q;
}

double query_likelihood(const Vocabulary& vocabulary, const Document& document,
                        const Query& query, double mu) {
  if (mu < 0.0) throw ParameterError("smoothing mass mu must be non-negative");
  if (query.terms.empty()) throw ParameterError("query has no in-vocabulary term");
  const double length = static_cast<double>(document.size());
  double score = 0.0;
  for (WordId term : query.terms) {
    const double tf = static_cast<double>(term_frequency(vocabulary, term, document));
    const double p = (tf + mu * background_prob(vocabulary, term)) / (length + mu);
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    score += std::log(p);
  }
  return score;
}

bool passes_mode(const Document& document, const Query& query) {
  auto contains = [&](WordId w) {
    return std::find(document.tokens.begin(), document.tokens.end(), w) !=
           document.tokens.end();
  };
  if (query.mode == QueryMode::And) {
    return std::all_of(query.terms.begin(), query.terms.end(), contains);
  }
  return std::any_of(query.terms.begin(), query.terms.end(), contains);
}

RetrievedSet retrieve(const Corpus& corpus, const Query& query, std::size_t cutoff,
                      double mu) {
  if (cutoff < 1) throw ParameterError("retrieval cutoff must be at least 1");
  if (mu < 0.0) throw ParameterError("smoothing mass mu must be non-negative");

  // Candidate documents come from the postings of the query terms.
  std::vector<std::uint32_t> hits(corpus.size(), 0);
  std::vector<WordId> distinct = query.terms;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (WordId w : distinct) {
    for (const auto& p : corpus.postings(w)) ++hits[p.document];
  }
  const std::uint32_t needed =
      query.mode == QueryMode::And ? static_cast<std::uint32_t>(distinct.size()) : 1;

  RetrievedSet out;
  out.cutoff = cutoff;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    if (hits[d] < needed) continue;
    out.documents.push_back(
        {d, query_likelihood(corpus.vocabulary(), corpus.document(d), query, mu)});
  }
  if (out.documents.empty()) {
    throw EmptyResultError("no document passes the " + std::string(to_string(query.mode)) +
                           " rule for query '" + query.phrase + "'");
  }
  std::stable_sort(out.documents.begin(), out.documents.end(),
                   [](const ScoredDocument& a, const ScoredDocument& b) {
                     if (a.log_score != b.log_score) return a.log_score > b.log_score;
                     return a.document < b.document;
                   });
  if (out.documents.size() > cutoff) out.documents.resize(cutoff);
  return out;
}

double precision_at_k(std::span<const std::size_t> ranking,
                      const std::unordered_set<std::size_t>& relevant, std::size_t k) {
  if (k < 1) throw ParameterError("precision@K requires K >= 1");
  if (k > ranking.size()) {
    throw ParameterError("precision@K: K=" + std::to_string(k) + " exceeds ranking length " +
                         std::to_string(ranking.size()));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (relevant.contains(ranking[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace qdtm
