#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qdtm/corpus.hpp"
#include "qdtm/random.hpp"

namespace qdtm {

// Token mass in fixed point. A plain token weighs kMassUnit; promotion
// amounts are rounded to the unit once, so adding and removing the same
// contribution is exact.
using Mass = std::int64_t;
inline constexpr Mass kMassUnit = 1'000'000;
inline double to_real(Mass m) { return static_cast<double>(m) / static_cast<double>(kMassUnit); }
Mass to_mass(double amount);

using TopicId = std::uint32_t;
inline constexpr TopicId kNoTopic = std::numeric_limits<TopicId>::max();

struct Hyperparameters {
  double alpha = 1.0;   // table concentration
  double beta = 0.5;    // symmetric topic-word smoothing
  double gamma = 1.5;   // topic concentration
  std::size_t initial_topics = 20;
  std::size_t initial_subtopics = 5;
  double tau = 0.5;     // relatedness threshold
  double u = 0.3;       // promotion weight
  std::size_t representative_words = 10;
  double prevalence_floor = 0.005;
  bool use_gpu = true;
  bool word_filtering = true;

  // Throws ParameterError. `queries` is the number of reserved parent topics.
  void validate(std::size_t queries) const;
};

struct PromotionTarget {
  WordId word;
  Mass amount;
};

// What one chain samples over. Word ids are local to the scope: the full
// vocabulary in the first phase, the parent topic's word set in the second.
struct ChainScope {
  std::size_t vocabulary_size = 0;
  std::vector<std::vector<WordId>> documents;

  // Reserved topics 0..reserved_topics-1 anchor the concept words.
  // anchor[w] is the reserved topic word w is pinned to, or kNoTopic.
  // Empty means no word is constrained.
  std::size_t reserved_topics = 0;
  std::vector<TopicId> anchor;
  // Concept words of each reserved topic; they are its representative words.
  std::vector<std::vector<WordId>> reserved_representatives;

  // promotion[w]: where the mass of a promoted token of w goes. Empty rows
  // (or an empty table) mean the word is never promoted.
  std::vector<std::vector<PromotionTarget>> promotion;

  // Unit-length word vectors, vocabulary_size x embedding_dim, or none.
  std::size_t embedding_dim = 0;
  std::vector<double> unit_vectors;
  std::vector<char> has_vector;

  bool anchored(WordId w) const { return !anchor.empty() && anchor[w] != kNoTopic; }
  bool promotable(WordId w) const { return !promotion.empty() && !promotion[w].empty(); }
  double base_density() const { return 1.0 / static_cast<double>(vocabulary_size); }
  std::size_t token_count() const;

  // Throws ParameterError on inconsistent sizes or ids.
  void validate() const;
};

// Per-iteration word/topic cohesion and its rank-normalized form.
struct CohesionCache {
  std::size_t vocabulary_size = 0;
  // Live topics at refresh time, ascending.
  std::vector<TopicId> topics;
  // Representative words of each cached topic with renormalized weights.
  std::vector<std::vector<std::pair<WordId, double>>> representatives;
  // topics.size() x vocabulary_size, row-major by topic.
  std::vector<double> cv;
  std::vector<double> tilde;
  // Words whose rows were computed; others hold 0.
  std::vector<char> computed;

  std::optional<std::size_t> slot(TopicId k) const;
  double cohesion(TopicId k, WordId w) const;
  // nullopt if k was not live when the cache was built.
  std::optional<double> rank_value(TopicId k, WordId w) const;
};

class HdpChain {
 public:
  struct Table {
    TopicId topic = kNoTopic;  // kNoTopic marks a free slot
    Mass mass = 0;
  };

  struct TableWeights {
    std::vector<std::uint32_t> tables;
    std::vector<double> weights;
    double new_table = 0.0;
  };

  struct TopicWeights {
    std::vector<TopicId> topics;
    std::vector<double> weights;
    double new_topic = 0.0;
  };

  struct TableChoice {
    std::uint32_t table;
    bool fresh;
  };

  struct TopicChoice {
    TopicId topic;
    bool fresh;
  };

  struct Audit {
    std::size_t constraint_violations = 0;
    // Maintained counters equal a from-scratch recount.
    bool counts_match = true;
    // Σ_w n_kw == n_k for every topic and m. == Σ_k m_k.
    bool conserved = true;
    bool nonnegative = true;
    bool tables_consistent = true;
    std::string detail;

    bool ok() const {
      return constraint_violations == 0 && counts_match && conserved && nonnegative &&
             tables_consistent;
    }
  };

  // Resumable part of a chain: assignments, flags, and generator state.
  struct Snapshot {
    std::vector<std::vector<TopicId>> table_topics;
    std::vector<std::vector<std::uint32_t>> token_tables;
    std::vector<std::vector<std::uint8_t>> flags;
    std::string rng_state;
    std::size_t iterations = 0;
  };

  using SweepCallback = std::function<void(const HdpChain&, std::size_t)>;

  HdpChain(ChainScope scope, Hyperparameters hyper, std::uint64_t seed);

  // Every token on its own table; constrained tokens on their anchor topic,
  // the rest on one ordinary topic drawn uniformly per document.
  void initialize(std::size_t topics);

  // Loads explicit assignments. table_topics[d][t] is the topic of slot t
  // (kNoTopic for a free slot); every non-free slot must hold a token.
  void assign(const std::vector<std::vector<TopicId>>& table_topics,
              const std::vector<std::vector<std::uint32_t>>& token_tables,
              const std::vector<std::vector<std::uint8_t>>& flags);

  Snapshot snapshot() const;
  void restore(const Snapshot& snapshot);

  const ChainScope& scope() const { return scope_; }
  const Hyperparameters& hyperparameters() const { return hyper_; }
  Rng& rng() { return rng_; }

  std::size_t topic_capacity() const { return live_.size(); }
  bool live(TopicId k) const { return k < live_.size() && live_[k] != 0; }
  std::vector<TopicId> live_topics() const;
  std::size_t live_topic_count() const;
  bool reserved(TopicId k) const { return k < scope_.reserved_topics; }

  Mass topic_word(TopicId k, WordId w) const { return nkw_[k][w]; }
  Mass topic_mass(TopicId k) const { return nk_[k]; }
  std::uint32_t tables_of(TopicId k) const { return mk_[k]; }
  std::uint64_t total_tables() const { return total_tables_; }
  // Table counts as the transition weights see them: anchored reserved
  // topics count at least one table so they stay selectable.
  double effective_tables(TopicId k) const;
  double effective_total_tables() const;

  const std::vector<Table>& tables(std::size_t doc) const { return tables_[doc]; }
  std::uint32_t token_table(std::size_t doc, std::size_t pos) const { return token_table_[doc][pos]; }
  bool token_flag(std::size_t doc, std::size_t pos) const { return flags_[doc][pos] != 0; }
  TopicId token_topic(std::size_t doc, std::size_t pos) const;
  WordId word(std::size_t doc, std::size_t pos) const { return scope_.documents[doc][pos]; }
  // Mass a token contributes under the given flag.
  Mass token_mass(WordId w, bool flag) const;

  // f_k(w) = (n_kw + β) / (n_k + Vβ) with the current counts.
  double predictive(TopicId k, WordId w) const;
  // Prior density of a brand-new topic: 1/V of the scope.
  double new_topic_density() const { return scope_.base_density(); }
  // Indicator: false iff w is pinned to a reserved topic other than k.
  bool compatible(WordId w, TopicId k) const;
  // p(w | t^new, k): mixture over live topics plus the new-topic prior.
  double new_table_likelihood(WordId w) const;

  // Unnormalized weights for the current state; the token being resampled
  // must already be removed.
  TableWeights table_weights(std::size_t doc, WordId w) const;
  TopicWeights topic_weights(WordId w) const;

  TableChoice draw_table(std::size_t doc, WordId w);
  TopicChoice draw_topic(WordId w);
  // Word-filtering gate: Bernoulli with the word's rank value under k.
  bool draw_flag(WordId w, TopicId k);

  void remove_token(std::size_t doc, std::size_t pos);
  // Seats the token at `table`. A free or new slot is opened with `topic`;
  // an occupied slot must already serve `topic`.
  void add_token(std::size_t doc, std::size_t pos, std::uint32_t table, TopicId topic, bool flag);

  void refresh_cohesion();
  const CohesionCache& cohesion() const { return cohesion_; }
  bool filtering_active() const;

  void sample_token(std::size_t doc, std::size_t pos);
  void sweep();
  void run(std::size_t iterations, const SweepCallback& after_sweep = {});
  std::size_t iterations_done() const { return iterations_; }

  Audit audit() const;

  // Token count (unit mass) currently on tables of topic k.
  std::vector<std::size_t> tokens_per_topic() const;
  // Real-valued table mass of document `doc` per topic id.
  std::vector<double> document_topic_mass(std::size_t doc) const;

 private:
  void reset_counts();
  void ensure_topic(TopicId k);
  TopicId next_free_topic() const;
  std::uint32_t next_free_table(std::size_t doc) const;
  void apply(WordId w, bool flag, TopicId k, Mass sign);
  void fill_predictive(WordId w);
  bool anchored_reserved(TopicId k) const;

  ChainScope scope_;
  Hyperparameters hyper_;
  Rng rng_;
  std::vector<Mass> row_mass_;
  std::vector<char> anchored_topic_;

  std::vector<std::vector<Mass>> nkw_;
  std::vector<Mass> nk_;
  std::vector<std::uint32_t> mk_;
  std::vector<char> live_;
  std::uint64_t total_tables_ = 0;

  std::vector<std::vector<Table>> tables_;
  std::vector<std::vector<std::uint32_t>> token_table_;
  std::vector<std::vector<std::uint8_t>> flags_;

  CohesionCache cohesion_;
  std::size_t iterations_ = 0;

  // Scratch for one token: f_k(w) by topic id.
  std::vector<double> f_;
};

// Builds the cohesion cache for the chain's live topics. Only words marked
// in `words` (all words when empty) get CV and rank rows.
CohesionCache compute_cohesion(const HdpChain& chain, const std::vector<char>& words = {});

}  // namespace qdtm
