#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qdtm/concepts.hpp"
#include "qdtm/corpus.hpp"
#include "qdtm/embeddings.hpp"
#include "qdtm/retrieval.hpp"
#include "qdtm/sampler.hpp"

namespace qdtm {

inline constexpr const char* kResultFormat = "qdtm-result/1";
inline constexpr const char* kCheckpointFormat = "qdtm-checkpoint/1";
inline constexpr const char* kVersion = "0.1.0";

struct QuerySpec {
  std::string phrase;
  QueryMode mode = QueryMode::Or;
};

struct FitOptions {
  Hyperparameters hyper;
  ExpansionOptions expansion;
  std::size_t retrieval_cutoff = kDefaultRetrievalCutoff;
  double smoothing = kDefaultSmoothing;
  std::size_t iterations_phase1 = 1000;
  std::size_t iterations_phase2 = 500;
  std::uint64_t seed = 42;
  // Upper bound on concurrently running second-phase chains.
  std::size_t threads = 1;
  std::size_t top_words = 25;
  bool full_posterior = false;

  // Throws ParameterError. `queries` is the number of queries to fit.
  void validate(std::size_t queries) const;
};

// Resumable first phase. `every` = 0 writes only at the end of the phase.
struct CheckpointOptions {
  std::filesystem::path path;
  std::size_t every = 0;
  bool resume = false;
  // Compared on resume; a mismatch means the checkpoint belongs to another run.
  std::string fingerprint;
};

// Expands every query into its concept word set.
std::vector<ConceptWordSet> expand_queries(const Corpus& corpus, const std::vector<QuerySpec>& queries,
                                           const FitOptions& options,
                                           const EmbeddingTable* embeddings);

// Promotion rows over `words` (local ids index into it). Each row holds the
// word's own unit plus u for every related concept word; words without a
// related concept word get no row. Both sides of a pair must lie in `words`.
std::vector<std::vector<PromotionTarget>> promotion_rows(const EmbeddingTable& embeddings,
                                                         const std::vector<WordId>& words,
                                                         const std::vector<WordId>& concepts,
                                                         double tau, double u);

// First-phase scope over the whole corpus. Topic q is the parent of query q.
ChainScope phase1_scope(const Corpus& corpus, const std::vector<ConceptWordSet>& concepts,
                        const EmbeddingTable* embeddings, const Hyperparameters& hyper);

// Tokens the first phase placed on one parent topic.
struct SubCorpus {
  TopicId parent = 0;
  // Corpus indices of the documents that kept at least one token.
  std::vector<std::size_t> documents;
  // Global word ids, in document order.
  std::vector<std::vector<WordId>> tokens;
  // Distinct word types, ascending; a local id is a position in this list.
  std::vector<WordId> words;

  std::size_t token_count() const;
};

// Throws EmptyResultError when no token sits on the parent topic.
SubCorpus extract_parent_subcorpus(const HdpChain& chain, TopicId parent);

ChainScope phase2_scope(const SubCorpus& sub, const ConceptWordSet& concepts,
                        const EmbeddingTable* embeddings, const Hyperparameters& hyper);

struct WeightedWord {
  std::string token;
  double weight = 0.0;
};

struct TopicSummary {
  TopicId id = 0;
  std::vector<WeightedWord> top_words;
  // Unit tokens on the topic over all corpus tokens.
  double prevalence = 0.0;
  std::size_t tokens = 0;
};

struct SubtopicSet {
  std::vector<TopicSummary> subtopics;
  // Full subtopic-word rows over the sub-corpus words, aligned with subtopics.
  std::vector<std::vector<double>> phi;
  std::vector<WordId> words;
  std::size_t pruned = 0;
  // No subtopic survived; the parent stands in as the only subtopic.
  bool fallback = false;
};

// Fresh HDP over the sub-corpus, then pruning below the prevalence floor.
SubtopicSet run_phase2(const SubCorpus& sub, const Corpus& corpus, const ConceptWordSet& concepts,
                       const EmbeddingTable* embeddings, const Hyperparameters& hyper,
                       std::size_t iterations, std::uint64_t seed, std::size_t top_words,
                       const TopicSummary& parent);

// φ_k over the chain's scope vocabulary.
std::vector<double> topic_word_distribution(const HdpChain& chain, TopicId k);
// θ_j over the chain's live topics (ascending id), smoothed with α / K_live.
std::vector<double> document_topic_distribution(const HdpChain& chain, std::size_t doc);

// Top words of topic k; `words` maps local ids to global ids (empty: identity).
TopicSummary summarize_topic(const HdpChain& chain, TopicId k, const Vocabulary& vocabulary,
                             const std::vector<WordId>& words, std::size_t top_n,
                             std::size_t corpus_tokens);

struct QueryResult {
  std::string query;
  QueryMode mode = QueryMode::Or;
  ExpansionMethod method = ExpansionMethod::Kld;
  std::vector<WeightedWord> concept_words;
  TopicSummary parent;
  // θ_j of the parent topic for every corpus document, in corpus order.
  std::vector<double> document_weights;
  std::vector<TopicSummary> subtopics;
  std::size_t pruned_subtopics = 0;
  bool subtopic_fallback = false;
  // Only with full_posterior: subtopic rows over subtopic_words.
  std::vector<std::string> subtopic_words;
  std::vector<std::vector<double>> subtopic_phi;
};

struct RunMetadata {
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::size_t iterations_phase1 = 0;
  std::size_t iterations_phase2 = 0;
  Hyperparameters hyper;
  ExpansionOptions expansion;
  std::size_t retrieval_cutoff = 0;
  double smoothing = 0.0;
  std::size_t corpus_documents = 0;
  std::size_t corpus_tokens = 0;
  std::size_t vocabulary_size = 0;
  std::size_t live_topics = 0;
  bool embeddings = false;
};

struct TopicModelResult {
  RunMetadata metadata;
  std::vector<std::string> documents;
  std::vector<QueryResult> queries;
  // Every live first-phase topic.
  std::vector<TopicSummary> topics;
  // Only with full_posterior: φ rows aligned with `topics`, θ rows per document.
  std::vector<std::vector<double>> phi;
  std::vector<std::vector<double>> theta;
};

using Phase1Callback = std::function<void(const HdpChain&, std::size_t)>;

// The whole pipeline: expansion, first phase, parent extraction, second phase.
TopicModelResult fit(const Corpus& corpus, const std::vector<QuerySpec>& queries,
                     const EmbeddingTable* embeddings, const FitOptions& options,
                     const std::optional<CheckpointOptions>& checkpoint = std::nullopt,
                     const Phase1Callback& after_sweep = {});

// Same, from precomputed concept sets.
TopicModelResult fit(const Corpus& corpus, const std::vector<QuerySpec>& queries,
                     const std::vector<ConceptWordSet>& concepts, const EmbeddingTable* embeddings,
                     const FitOptions& options,
                     const std::optional<CheckpointOptions>& checkpoint = std::nullopt,
                     const Phase1Callback& after_sweep = {});

// Result JSON; from_json(to_json(r)) reproduces r and re-serializes to the
// same bytes.
std::string result_to_json(const TopicModelResult& result, int indent = 2);
TopicModelResult result_from_json(const std::string& text);
void write_result(const std::filesystem::path& path, const TopicModelResult& result);
TopicModelResult read_result(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const HdpChain::Snapshot& snapshot,
                     const std::string& fingerprint);
// Throws FormatError on a bad file and ParameterError on a fingerprint mismatch.
HdpChain::Snapshot load_checkpoint(const std::filesystem::path& path,
                                   const std::string& fingerprint);

}  // namespace qdtm
