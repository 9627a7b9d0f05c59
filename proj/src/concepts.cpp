#include "qdtm/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "qdtm/error.hpp"

namespace qdtm {

namespace {

void require_retrieved(const RetrievedSet& retrieved) {
  if (retrieved.empty()) throw ParameterError("retrieved document set is empty");
}

// p̂(d|q) over the retrieved set, from the stored log query likelihoods.
std::vector<double> document_weights(const RetrievedSet& retrieved) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& d : retrieved.documents) top = std::max(top, d.log_score);
  if (!std::isfinite(top)) {
    throw EmptyResultError("relevance model: every retrieved document has zero query likelihood");
  }
  std::vector<double> w(retrieved.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(retrieved.documents[i].log_score - top);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

std::size_t retrieved_token_count(const Corpus& corpus, const RetrievedSet& retrieved) {
  std::size_t n = 0;
  for (const auto& d : retrieved.documents) n += corpus.document(d.document).size();
  return n;
}

double kld_term(double p_r, double p_c) {
  if (p_r <= 0.0) return 0.0;
  if (p_c <= 0.0) throw ConsistencyError("word seen in retrieved set but absent from corpus");
  return p_r * std::log(p_r / p_c);
}

}  // namespace

std::string_view to_string(ExpansionMethod method) {
  switch (method) {
    case ExpansionMethod::Fre: return "fre";
    case ExpansionMethod::Kld: return "kld";
    case ExpansionMethod::Rel: return "rel";
  }
  return "kld";
}

ExpansionMethod parse_expansion_method(std::string_view text) {
  if (text == "fre" || text == "FRE") return ExpansionMethod::Fre;
  if (text == "kld" || text == "KLD") return ExpansionMethod::Kld;
  if (text == "rel" || text == "REL") return ExpansionMethod::Rel;
  throw ParameterError("unknown expansion method '" + std::string(text) + "' (expected fre|kld|rel)");
}

std::vector<WordId> ConceptWordSet::ids() const {
  std::vector<WordId> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(w.word);
  return out;
}

bool ConceptWordSet::contains(WordId word) const {
  return std::any_of(words.begin(), words.end(), [&](const ConceptWord& c) { return c.word == word; });
}

double score_fre(const Corpus& corpus, WordId word, const RetrievedSet& retrieved) {
  require_retrieved(retrieved);
  double s = 0.0;
  for (const auto& d : retrieved.documents) {
    s += static_cast<double>(term_frequency(corpus.vocabulary(), word, corpus.document(d.document)));
  }
  return s;
}

double score_kld(const Corpus& corpus, WordId word, const RetrievedSet& retrieved) {
  const double p_r = score_fre(corpus, word, retrieved) /
                     static_cast<double>(retrieved_token_count(corpus, retrieved));
  return kld_term(p_r, background_prob(corpus.vocabulary(), word));
}

double relevance_model_prob(const Corpus& corpus, WordId word, const RetrievedSet& retrieved) {
  require_retrieved(retrieved);
  corpus.vocabulary().check(word);
  const auto weights = document_weights(retrieved);
  double p = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& doc = corpus.document(retrieved.documents[i].document);
    p += weights[i] * static_cast<double>(term_frequency(corpus.vocabulary(), word, doc)) /
         static_cast<double>(doc.size());
  }
  return p;
}

std::vector<double> fre_scores(const Corpus& corpus, const RetrievedSet& retrieved) {
  require_retrieved(retrieved);
  std::vector<double> s(corpus.vocabulary().size(), 0.0);
  for (const auto& d : retrieved.documents) {
    for (WordId w : corpus.document(d.document).tokens) s[w] += 1.0;
  }
  return s;
}

std::vector<double> kld_scores(const Corpus& corpus, const RetrievedSet& retrieved) {
  auto s = fre_scores(corpus, retrieved);
  const double total = static_cast<double>(retrieved_token_count(corpus, retrieved));
  for (WordId w = 0; w < s.size(); ++w) {
    s[w] = kld_term(s[w] / total, background_prob(corpus.vocabulary(), w));
  }
  return s;
}

std::vector<double> relevance_model(const Corpus& corpus, const RetrievedSet& retrieved) {
  require_retrieved(retrieved);
  const auto weights = document_weights(retrieved);
  std::vector<double> p(corpus.vocabulary().size(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& doc = corpus.document(retrieved.documents[i].document);
    const double share = weights[i] / static_cast<double>(doc.size());
    for (WordId w : doc.tokens) p[w] += share;
  }
  return p;
}

std::vector<double> query_similarity(const EmbeddingTable& embeddings, const Query& query,
                                     std::size_t cutoff) {
  const auto qv = mean_vector(embeddings, query.terms);
  if (qv.empty() || std::all_of(qv.begin(), qv.end(), [](double x) { return x == 0.0; })) {
    return {};
  }
  struct Scored {
    WordId word;
    double sim;
  };
  std::vector<Scored> scored;
  for (WordId w = 0; w < embeddings.vocabulary_size(); ++w) {
    if (!embeddings.has(w)) continue;
    auto v = embeddings.vector(w);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) continue;
    scored.push_back({w, cosine(v, qv)});
  }
  const std::size_t keep = std::min(cutoff, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      return a.sim != b.sim ? a.sim > b.sim : a.word < b.word;
                    });
  std::vector<double> sim(embeddings.vocabulary_size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < keep; ++i) total += std::max(scored[i].sim, 0.0);
  if (total <= 0.0) return sim;
  for (std::size_t i = 0; i < keep; ++i) sim[scored[i].word] = std::max(scored[i].sim, 0.0) / total;
  return sim;
}

std::vector<double> rel_scores(const Corpus& corpus, const Query& query,
                               const RetrievedSet& retrieved, const EmbeddingTable& embeddings,
                               double lambda, std::size_t similarity_cutoff) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lambda must lie in [0, 1]");
  auto rm = relevance_model(corpus, retrieved);
  auto sim = query_similarity(embeddings, query, similarity_cutoff);
  if (sim.empty()) {
    spdlog::warn("query '{}' has no embedding; REL falls back to the relevance model", query.phrase);
    return rm;
  }
  for (WordId w = 0; w < rm.size(); ++w) rm[w] = lambda * rm[w] + (1.0 - lambda) * sim[w];
  return rm;
}

double score_rel(const Corpus& corpus, WordId word, const Query& query,
                 const RetrievedSet& retrieved, const EmbeddingTable& embeddings, double lambda,
                 std::size_t similarity_cutoff) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lambda must lie in [0, 1]");
  const double rm = relevance_model_prob(corpus, word, retrieved);
  const auto sim = query_similarity(embeddings, query, similarity_cutoff);
  if (sim.empty()) {
    spdlog::warn("query '{}' has no embedding; REL falls back to the relevance model", query.phrase);
    return rm;
  }
  return lambda * rm + (1.0 - lambda) * sim[word];
}

ConceptWordSet extract_concept_words(const Corpus& corpus, const Query& query,
                                     const RetrievedSet& retrieved,
                                     const ExpansionOptions& options,
                                     const EmbeddingTable* embeddings) {
  if (options.count < 1) throw ParameterError("concept word count must be at least 1");
  std::vector<double> scores;
  switch (options.method) {
    case ExpansionMethod::Fre: scores = fre_scores(corpus, retrieved); break;
    case ExpansionMethod::Kld: scores = kld_scores(corpus, retrieved); break;
    case ExpansionMethod::Rel:
      if (embeddings == nullptr) throw ParameterError("REL expansion requires embeddings");
      scores = rel_scores(corpus, query, retrieved, *embeddings, options.lambda,
                          options.similarity_cutoff);
      break;
  }

  std::vector<ConceptWord> candidates;
  for (WordId w = 0; w < scores.size(); ++w) {
    if (!(scores[w] > 0.0)) continue;
    if (options.exclude_query_terms &&
        std::find(query.terms.begin(), query.terms.end(), w) != query.terms.end()) {
      continue;
    }
    candidates.push_back({w, scores[w]});
  }
  const std::size_t keep = std::min(options.count, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), [](const ConceptWord& a, const ConceptWord& b) {
                      return a.score != b.score ? a.score > b.score : a.word < b.word;
                    });
  candidates.resize(keep);
  if (keep < options.count) {
    spdlog::warn("query '{}': only {} positive-scoring concept word(s), {} requested", query.phrase,
                 keep, options.count);
  }
  return ConceptWordSet{query.phrase, options.method, std::move(candidates)};
}

ConceptWordSet extract_concept_words(const Corpus& corpus, const Query& query, std::size_t cutoff,
                                     double mu, const ExpansionOptions& options,
                                     const EmbeddingTable* embeddings) {
  return extract_concept_words(corpus, query, retrieve(corpus, query, cutoff, mu), options,
                               embeddings);
}

}  // namespace qdtm
