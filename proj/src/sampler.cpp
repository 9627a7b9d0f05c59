#include "qdtm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdtm/error.hpp"

namespace qdtm {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Index into `weights`, weights.size() for the trailing `extra` outcome, or
// kNone when every weight is zero.
std::size_t pick(Rng& rng, std::span<const double> weights, double extra) {
  double total = extra;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return kNone;
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = kNone;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (target < acc) return i;
  }
  if (extra > 0.0) return weights.size();
  return last;
}

}  // namespace

Mass to_mass(double amount) {
  return static_cast<Mass>(std::llround(amount * static_cast<double>(kMassUnit)));
}

void Hyperparameters::validate(std::size_t queries) const {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (initial_topics < queries + 1) {
    throw ParameterError("initial topic count must be at least the number of queries + 1 (" +
                         std::to_string(queries + 1) + ")");
  }
  if (initial_subtopics < 1) throw ParameterError("initial subtopic count must be at least 1");
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("promotion weight u must lie in (0, 1)");
  if (representative_words < 1) throw ParameterError("representative word count must be at least 1");
  if (!(prevalence_floor >= 0.0 && prevalence_floor < 1.0)) {
    throw ParameterError("prevalence floor must lie in [0, 1)");
  }
}

std::size_t ChainScope::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

void ChainScope::validate() const {
  if (vocabulary_size == 0) throw ParameterError("chain scope has an empty vocabulary");
  for (const auto& doc : documents) {
    for (WordId w : doc) {
      if (w >= vocabulary_size) throw ParameterError("chain scope: word id out of range");
    }
  }
  if (!anchor.empty()) {
    if (anchor.size() != vocabulary_size) throw ParameterError("chain scope: anchor table size");
    for (TopicId a : anchor) {
      if (a != kNoTopic && a >= reserved_topics) {
        throw ParameterError("chain scope: anchor outside the reserved topics");
      }
    }
  }
  if (!reserved_representatives.empty() && reserved_representatives.size() != reserved_topics) {
    throw ParameterError("chain scope: one representative list per reserved topic expected");
  }
  for (const auto& reps : reserved_representatives) {
    for (WordId w : reps) {
      if (w >= vocabulary_size) throw ParameterError("chain scope: representative out of range");
    }
  }
  if (!promotion.empty()) {
    if (promotion.size() != vocabulary_size) throw ParameterError("chain scope: promotion table size");
    for (const auto& row : promotion) {
      for (const auto& t : row) {
        if (t.word >= vocabulary_size || t.amount <= 0) {
          throw ParameterError("chain scope: invalid promotion target");
        }
      }
    }
  }
  if (embedding_dim > 0 && (unit_vectors.size() != vocabulary_size * embedding_dim ||
                            has_vector.size() != vocabulary_size)) {
    throw ParameterError("chain scope: embedding table size");
  }
}

std::optional<std::size_t> CohesionCache::slot(TopicId k) const {
  auto it = std::lower_bound(topics.begin(), topics.end(), k);
  if (it == topics.end() || *it != k) return std::nullopt;
  return static_cast<std::size_t>(it - topics.begin());
}

double CohesionCache::cohesion(TopicId k, WordId w) const {
  auto s = slot(k);
  if (!s || w >= vocabulary_size) throw LookupError("cohesion: topic or word not cached");
  return cv[*s * vocabulary_size + w];
}

std::optional<double> CohesionCache::rank_value(TopicId k, WordId w) const {
  auto s = slot(k);
  if (!s || w >= vocabulary_size || !computed[w]) return std::nullopt;
  return tilde[*s * vocabulary_size + w];
}

HdpChain::HdpChain(ChainScope scope, Hyperparameters hyper, std::uint64_t seed)
    : scope_(std::move(scope)), hyper_(hyper), rng_(seed) {
  scope_.validate();
  if (!(hyper_.beta > 0.0)) throw ParameterError("beta must be positive");
  if (hyper_.alpha < 0.0 || hyper_.gamma < 0.0) {
    throw ParameterError("concentrations must be non-negative");
  }
  row_mass_.assign(scope_.vocabulary_size, kMassUnit);
  if (!scope_.promotion.empty()) {
    for (WordId w = 0; w < scope_.vocabulary_size; ++w) {
      if (scope_.promotion[w].empty()) continue;
      Mass m = 0;
      for (const auto& t : scope_.promotion[w]) m += t.amount;
      row_mass_[w] = m;
    }
  }
  anchored_topic_.assign(scope_.reserved_topics, 0);
  if (!scope_.anchor.empty()) {
    for (TopicId a : scope_.anchor) {
      if (a != kNoTopic) anchored_topic_[a] = 1;
    }
  }
  tables_.resize(scope_.documents.size());
  token_table_.resize(scope_.documents.size());
  flags_.resize(scope_.documents.size());
  reset_counts();
}

bool HdpChain::anchored_reserved(TopicId k) const {
  return k < anchored_topic_.size() && anchored_topic_[k] != 0;
}

void HdpChain::ensure_topic(TopicId k) {
  if (k == kNoTopic) throw ConsistencyError("attempt to allocate the sentinel topic id");
  if (k < live_.size()) return;
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  nkw_.resize(n, std::vector<Mass>(scope_.vocabulary_size, 0));
  nk_.resize(n, 0);
  mk_.resize(n, 0);
  live_.resize(n, 0);
  f_.resize(n, 0.0);
}

void HdpChain::reset_counts() {
  nkw_.clear();
  nk_.clear();
  mk_.clear();
  live_.clear();
  f_.clear();
  total_tables_ = 0;
  if (scope_.reserved_topics > 0) ensure_topic(static_cast<TopicId>(scope_.reserved_topics - 1));
  for (TopicId k = 0; k < scope_.reserved_topics; ++k) live_[k] = anchored_reserved(k) ? 1 : 0;
  for (std::size_t d = 0; d < scope_.documents.size(); ++d) {
    tables_[d].clear();
    token_table_[d].assign(scope_.documents[d].size(), 0);
    flags_[d].assign(scope_.documents[d].size(), 0);
  }
}

void HdpChain::initialize(std::size_t topics) {
  if (topics < scope_.reserved_topics + 1) {
    throw ParameterError("initial topic count must exceed the number of reserved topics");
  }
  reset_counts();
  ensure_topic(static_cast<TopicId>(topics - 1));
  const std::size_t ordinary = topics - scope_.reserved_topics;
  for (std::size_t d = 0; d < scope_.documents.size(); ++d) {
    const auto doc_topic = static_cast<TopicId>(scope_.reserved_topics + rng_.index(ordinary));
    const auto& words = scope_.documents[d];
    for (std::size_t i = 0; i < words.size(); ++i) {
      const TopicId k = scope_.anchored(words[i]) ? scope_.anchor[words[i]] : doc_topic;
      add_token(d, i, static_cast<std::uint32_t>(i), k, false);
    }
  }
  iterations_ = 0;
}

void HdpChain::assign(const std::vector<std::vector<TopicId>>& table_topics,
                      const std::vector<std::vector<std::uint32_t>>& token_tables,
                      const std::vector<std::vector<std::uint8_t>>& flags) {
  const std::size_t docs = scope_.documents.size();
  if (table_topics.size() != docs || token_tables.size() != docs || flags.size() != docs) {
    throw ParameterError("assignment does not match the number of documents");
  }
  reset_counts();
  for (std::size_t d = 0; d < docs; ++d) {
    if (token_tables[d].size() != scope_.documents[d].size() ||
        flags[d].size() != scope_.documents[d].size()) {
      throw ParameterError("assignment does not match document " + std::to_string(d) + " length");
    }
    for (TopicId k : table_topics[d]) {
      if (k != kNoTopic && reserved(k) && !anchored_reserved(k)) {
        throw ParameterError("topic " + std::to_string(k) + " is reserved for a query");
      }
      tables_[d].push_back({k, 0});
      if (k != kNoTopic) ensure_topic(k);
    }
    for (std::size_t i = 0; i < scope_.documents[d].size(); ++i) {
      const std::uint32_t t = token_tables[d][i];
      if (t >= tables_[d].size() || tables_[d][t].topic == kNoTopic) {
        throw ParameterError("token assigned to a missing table in document " + std::to_string(d));
      }
      const WordId w = scope_.documents[d][i];
      const bool flag = flags[d][i] != 0;
      apply(w, flag, tables_[d][t].topic, +1);
      tables_[d][t].mass += token_mass(w, flag);
      token_table_[d][i] = t;
      flags_[d][i] = flag ? 1 : 0;
    }
    for (auto& slot : tables_[d]) {
      if (slot.topic == kNoTopic) continue;
      if (slot.mass == 0) throw ParameterError("table without tokens in document " + std::to_string(d));
      ++mk_[slot.topic];
      ++total_tables_;
      live_[slot.topic] = 1;
    }
  }
  iterations_ = 0;
}

HdpChain::Snapshot HdpChain::snapshot() const {
  Snapshot s;
  s.table_topics.resize(tables_.size());
  for (std::size_t d = 0; d < tables_.size(); ++d) {
    for (const auto& slot : tables_[d]) s.table_topics[d].push_back(slot.topic);
  }
  s.token_tables = token_table_;
  s.flags = flags_;
  s.rng_state = rng_.save();
  s.iterations = iterations_;
  return s;
}

void HdpChain::restore(const Snapshot& snapshot) {
  assign(snapshot.table_topics, snapshot.token_tables, snapshot.flags);
  rng_.restore(snapshot.rng_state);
  iterations_ = snapshot.iterations;
}

std::vector<TopicId> HdpChain::live_topics() const {
  std::vector<TopicId> out;
  for (TopicId k = 0; k < live_.size(); ++k) {
    if (live_[k]) out.push_back(k);
  }
  return out;
}

std::size_t HdpChain::live_topic_count() const {
  return static_cast<std::size_t>(std::count(live_.begin(), live_.end(), 1));
}

double HdpChain::effective_tables(TopicId k) const {
  if (!live(k)) return 0.0;
  const double m = static_cast<double>(mk_[k]);
  return anchored_reserved(k) ? std::max(m, 1.0) : m;
}

double HdpChain::effective_total_tables() const {
  double extra = 0.0;
  for (TopicId k = 0; k < anchored_topic_.size(); ++k) {
    if (anchored_topic_[k] && mk_[k] == 0) extra += 1.0;
  }
  return static_cast<double>(total_tables_) + extra;
}

TopicId HdpChain::token_topic(std::size_t doc, std::size_t pos) const {
  return tables_[doc][token_table_[doc][pos]].topic;
}

Mass HdpChain::token_mass(WordId w, bool flag) const {
  return flag && scope_.promotable(w) ? row_mass_[w] : kMassUnit;
}

double HdpChain::predictive(TopicId k, WordId w) const {
  const double beta = hyper_.beta;
  return (to_real(nkw_[k][w]) + beta) /
         (to_real(nk_[k]) + static_cast<double>(scope_.vocabulary_size) * beta);
}

bool HdpChain::compatible(WordId w, TopicId k) const {
  return !scope_.anchored(w) || scope_.anchor[w] == k;
}

void HdpChain::fill_predictive(WordId w) {
  for (TopicId k = 0; k < live_.size(); ++k) {
    f_[k] = live_[k] ? predictive(k, w) : 0.0;
  }
}

double HdpChain::new_table_likelihood(WordId w) const {
  const double m_total = effective_total_tables();
  const double gamma = hyper_.gamma;
  double sum = 0.0;
  for (TopicId k = 0; k < live_.size(); ++k) {
    if (!live_[k]) continue;
    sum += effective_tables(k) * predictive(k, w);
  }
  return (sum + gamma * new_topic_density()) / (m_total + gamma);
}

HdpChain::TableWeights HdpChain::table_weights(std::size_t doc, WordId w) const {
  TableWeights out;
  const auto& slots = tables_[doc];
  for (std::uint32_t t = 0; t < slots.size(); ++t) {
    const auto& slot = slots[t];
    if (slot.topic == kNoTopic) continue;
    out.tables.push_back(t);
    out.weights.push_back(compatible(w, slot.topic)
                              ? to_real(slot.mass) * predictive(slot.topic, w)
                              : 0.0);
  }
  out.new_table = hyper_.alpha * new_table_likelihood(w);
  return out;
}

HdpChain::TopicWeights HdpChain::topic_weights(WordId w) const {
  TopicWeights out;
  for (TopicId k = 0; k < live_.size(); ++k) {
    if (!live_[k]) continue;
    out.topics.push_back(k);
    out.weights.push_back(compatible(w, k) ? effective_tables(k) * predictive(k, w) : 0.0);
  }
  // A pinned word may not open a topic other than its anchor.
  out.new_topic = scope_.anchored(w) ? 0.0 : hyper_.gamma * new_topic_density();
  return out;
}

std::uint32_t HdpChain::next_free_table(std::size_t doc) const {
  const auto& slots = tables_[doc];
  for (std::uint32_t t = 0; t < slots.size(); ++t) {
    if (slots[t].topic == kNoTopic) return t;
  }
  return static_cast<std::uint32_t>(slots.size());
}

TopicId HdpChain::next_free_topic() const {
  for (TopicId k = static_cast<TopicId>(scope_.reserved_topics); k < live_.size(); ++k) {
    if (!live_[k]) return k;
  }
  return static_cast<TopicId>(std::max(live_.size(), scope_.reserved_topics));
}

HdpChain::TableChoice HdpChain::draw_table(std::size_t doc, WordId w) {
  fill_predictive(w);
  thread_local std::vector<double> weights;
  thread_local std::vector<std::uint32_t> ids;
  weights.clear();
  ids.clear();
  const auto& slots = tables_[doc];
  for (std::uint32_t t = 0; t < slots.size(); ++t) {
    const auto& slot = slots[t];
    if (slot.topic == kNoTopic) continue;
    ids.push_back(t);
    weights.push_back(compatible(w, slot.topic) ? to_real(slot.mass) * f_[slot.topic] : 0.0);
  }
  double mixture = 0.0;
  for (TopicId k = 0; k < live_.size(); ++k) {
    if (live_[k]) mixture += effective_tables(k) * f_[k];
  }
  const double gamma = hyper_.gamma;
  const double p_new = (mixture + gamma * new_topic_density()) / (effective_total_tables() + gamma);
  const std::size_t i = pick(rng_, weights, hyper_.alpha * p_new);
  if (i == kNone || i == weights.size()) return {next_free_table(doc), true};
  return {ids[i], false};
}

HdpChain::TopicChoice HdpChain::draw_topic(WordId w) {
  fill_predictive(w);
  thread_local std::vector<double> weights;
  thread_local std::vector<TopicId> ids;
  weights.clear();
  ids.clear();
  for (TopicId k = 0; k < live_.size(); ++k) {
    if (!live_[k]) continue;
    ids.push_back(k);
    weights.push_back(compatible(w, k) ? effective_tables(k) * f_[k] : 0.0);
  }
  const bool pinned = scope_.anchored(w);
  const double fresh = pinned ? 0.0 : hyper_.gamma * new_topic_density();
  const std::size_t i = pick(rng_, weights, fresh);
  if (i == kNone) {
    if (pinned) return {scope_.anchor[w], false};
    return {next_free_topic(), true};
  }
  if (i == weights.size()) return {next_free_topic(), true};
  return {ids[i], false};
}

bool HdpChain::draw_flag(WordId w, TopicId k) {
  if (!hyper_.use_gpu || !scope_.promotable(w)) return false;
  if (!hyper_.word_filtering) return true;
  const double lambda = cohesion_.rank_value(k, w).value_or(0.0);
  return rng_.bernoulli(lambda);
}

void HdpChain::apply(WordId w, bool flag, TopicId k, Mass sign) {
  auto& row = nkw_[k];
  if (flag && scope_.promotable(w)) {
    for (const auto& t : scope_.promotion[w]) {
      row[t.word] += sign * t.amount;
      if (row[t.word] < 0) throw ConsistencyError("negative topic-word count after removal");
    }
    nk_[k] += sign * row_mass_[w];
  } else {
    row[w] += sign * kMassUnit;
    if (row[w] < 0) throw ConsistencyError("negative topic-word count after removal");
    nk_[k] += sign * kMassUnit;
  }
  if (nk_[k] < 0) throw ConsistencyError("negative topic mass after removal");
}

void HdpChain::remove_token(std::size_t doc, std::size_t pos) {
  const WordId w = scope_.documents[doc][pos];
  const std::uint32_t t = token_table_[doc][pos];
  if (t >= tables_[doc].size() || tables_[doc][t].topic == kNoTopic) {
    throw ConsistencyError("removing a token that is not seated");
  }
  auto& slot = tables_[doc][t];
  const TopicId k = slot.topic;
  const bool flag = flags_[doc][pos] != 0;
  apply(w, flag, k, -1);
  slot.mass -= token_mass(w, flag);
  if (slot.mass < 0) throw ConsistencyError("negative table mass after removal");
  token_table_[doc][pos] = std::numeric_limits<std::uint32_t>::max();
  if (slot.mass == 0) {
    slot.topic = kNoTopic;
    --mk_[k];
    --total_tables_;
    if (mk_[k] == 0 && !anchored_reserved(k)) {
      if (nk_[k] != 0) throw ConsistencyError("retiring a topic that still holds mass");
      live_[k] = 0;
    }
  }
}

void HdpChain::add_token(std::size_t doc, std::size_t pos, std::uint32_t table, TopicId topic,
                         bool flag) {
  auto& slots = tables_[doc];
  if (table > slots.size()) throw ParameterError("table index skips free slots");
  if (table == slots.size()) slots.push_back({});
  auto& slot = slots[table];
  if (slot.topic == kNoTopic) {
    if (topic >= scope_.reserved_topics || anchored_reserved(topic)) {
      ensure_topic(topic);
    } else {
      throw ParameterError("topic " + std::to_string(topic) + " is reserved for a query");
    }
    slot.topic = topic;
    live_[topic] = 1;
    ++mk_[topic];
    ++total_tables_;
  } else if (slot.topic != topic) {
    throw ParameterError("table serves a different topic");
  }
  const WordId w = scope_.documents[doc][pos];
  apply(w, flag, topic, +1);
  slot.mass += token_mass(w, flag);
  token_table_[doc][pos] = table;
  flags_[doc][pos] = flag ? 1 : 0;
}

bool HdpChain::filtering_active() const {
  if (!hyper_.use_gpu || !hyper_.word_filtering || scope_.promotion.empty()) return false;
  return std::any_of(scope_.promotion.begin(), scope_.promotion.end(),
                     [](const auto& row) { return !row.empty(); });
}

void HdpChain::refresh_cohesion() {
  std::vector<char> words(scope_.vocabulary_size, 0);
  for (WordId w = 0; w < scope_.vocabulary_size; ++w) words[w] = scope_.promotable(w) ? 1 : 0;
  cohesion_ = compute_cohesion(*this, words);
}

void HdpChain::sample_token(std::size_t doc, std::size_t pos) {
  const WordId w = scope_.documents[doc][pos];
  remove_token(doc, pos);
  const TableChoice table = draw_table(doc, w);
  TopicId topic;
  if (table.fresh || tables_[doc][table.table].topic == kNoTopic) {
    topic = draw_topic(w).topic;
  } else {
    topic = tables_[doc][table.table].topic;
  }
  const bool flag = draw_flag(w, topic);
  add_token(doc, pos, table.table, topic, flag);
}

void HdpChain::sweep() {
  for (std::size_t d = 0; d < scope_.documents.size(); ++d) {
    for (std::size_t i = 0; i < scope_.documents[d].size(); ++i) sample_token(d, i);
  }
}

void HdpChain::run(std::size_t iterations, const SweepCallback& after_sweep) {
  for (std::size_t it = 0; it < iterations; ++it) {
    if (filtering_active()) refresh_cohesion();
    sweep();
    ++iterations_;
    if (after_sweep) after_sweep(*this, iterations_);
  }
}

HdpChain::Audit HdpChain::audit() const {
  Audit a;
  const std::size_t K = live_.size();
  const std::size_t V = scope_.vocabulary_size;
  std::vector<std::vector<Mass>> nkw(K, std::vector<Mass>(V, 0));
  std::vector<Mass> nk(K, 0);
  std::vector<std::uint32_t> mk(K, 0);
  std::uint64_t total = 0;

  auto fail = [&](bool& field, const std::string& why) {
    field = false;
    if (a.detail.empty()) a.detail = why;
  };

  for (std::size_t d = 0; d < tables_.size(); ++d) {
    std::vector<Mass> mass(tables_[d].size(), 0);
    for (std::size_t i = 0; i < scope_.documents[d].size(); ++i) {
      const std::uint32_t t = token_table_[d][i];
      if (t >= tables_[d].size() || tables_[d][t].topic == kNoTopic) {
        fail(a.tables_consistent, "token at a free table in document " + std::to_string(d));
        continue;
      }
      const TopicId k = tables_[d][t].topic;
      const WordId w = scope_.documents[d][i];
      const bool flag = flags_[d][i] != 0;
      if (scope_.anchored(w) && scope_.anchor[w] != k) ++a.constraint_violations;
      if (flag && scope_.promotable(w)) {
        for (const auto& target : scope_.promotion[w]) nkw[k][target.word] += target.amount;
      } else {
        nkw[k][w] += kMassUnit;
      }
      nk[k] += token_mass(w, flag);
      mass[t] += token_mass(w, flag);
    }
    for (std::size_t t = 0; t < tables_[d].size(); ++t) {
      const auto& slot = tables_[d][t];
      if (slot.mass != mass[t]) fail(a.counts_match, "table mass mismatch in document " + std::to_string(d));
      if (slot.topic == kNoTopic) {
        if (slot.mass != 0) fail(a.tables_consistent, "free table with mass");
        continue;
      }
      if (slot.mass <= 0) fail(a.tables_consistent, "open table without mass");
      if (!live_[slot.topic]) fail(a.tables_consistent, "open table serving a retired topic");
      ++mk[slot.topic];
      ++total;
    }
  }

  std::uint64_t mk_sum = 0;
  for (std::size_t k = 0; k < K; ++k) {
    Mass row_sum = 0;
    for (std::size_t w = 0; w < V; ++w) {
      if (nkw_[k][w] < 0) fail(a.nonnegative, "negative topic-word count");
      if (nkw_[k][w] != nkw[k][w]) fail(a.counts_match, "topic-word count mismatch for topic " + std::to_string(k));
      row_sum += nkw_[k][w];
    }
    if (nk_[k] < 0) fail(a.nonnegative, "negative topic mass");
    if (row_sum != nk_[k]) fail(a.conserved, "topic " + std::to_string(k) + ": word counts do not sum to topic mass");
    if (nk_[k] != nk[k]) fail(a.counts_match, "topic mass mismatch for topic " + std::to_string(k));
    if (mk_[k] != mk[k]) fail(a.counts_match, "table count mismatch for topic " + std::to_string(k));
    mk_sum += mk_[k];
    if (live_[k] && mk_[k] == 0 && !anchored_reserved(static_cast<TopicId>(k))) {
      fail(a.tables_consistent, "live topic without tables");
    }
    if (!live_[k] && (mk_[k] != 0 || nk_[k] != 0)) fail(a.tables_consistent, "retired topic with counts");
  }
  if (mk_sum != total_tables_) fail(a.conserved, "total table count differs from the sum over topics");
  if (total != total_tables_) fail(a.counts_match, "total table count mismatch");
  if (a.constraint_violations > 0 && a.detail.empty()) {
    a.detail = std::to_string(a.constraint_violations) + " constrained token(s) off their anchor topic";
  }
  return a;
}

std::vector<std::size_t> HdpChain::tokens_per_topic() const {
  std::vector<std::size_t> out(live_.size(), 0);
  for (std::size_t d = 0; d < tables_.size(); ++d) {
    for (std::size_t i = 0; i < token_table_[d].size(); ++i) ++out[token_topic(d, i)];
  }
  return out;
}

std::vector<double> HdpChain::document_topic_mass(std::size_t doc) const {
  std::vector<double> out(live_.size(), 0.0);
  for (const auto& slot : tables_[doc]) {
    if (slot.topic != kNoTopic) out[slot.topic] += to_real(slot.mass);
  }
  return out;
}

CohesionCache compute_cohesion(const HdpChain& chain, const std::vector<char>& words) {
  const auto& scope = chain.scope();
  const std::size_t V = scope.vocabulary_size;
  const std::size_t dim = scope.embedding_dim;
  const std::size_t M = chain.hyperparameters().representative_words;
  const double beta = chain.hyperparameters().beta;

  CohesionCache cache;
  cache.vocabulary_size = V;
  cache.topics = chain.live_topics();
  const std::size_t T = cache.topics.size();
  cache.computed.assign(V, 0);
  for (WordId w = 0; w < V; ++w) cache.computed[w] = words.empty() || words[w] ? 1 : 0;
  cache.cv.assign(T * V, 0.0);
  cache.tilde.assign(T * V, 0.0);

  auto phi = [&](TopicId k, WordId w) {
    return (to_real(chain.topic_word(k, w)) + beta) /
           (to_real(chain.topic_mass(k)) + static_cast<double>(V) * beta);
  };

  std::vector<std::vector<double>> centroids(T, std::vector<double>(dim, 0.0));
  std::vector<WordId> order(V);
  for (std::size_t s = 0; s < T; ++s) {
    const TopicId k = cache.topics[s];
    std::vector<WordId> reps;
    if (chain.reserved(k) && k < scope.reserved_representatives.size() &&
        !scope.reserved_representatives[k].empty()) {
      reps = scope.reserved_representatives[k];
    } else {
      std::iota(order.begin(), order.end(), 0);
      const std::size_t keep = std::min(M, V);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                        [&](WordId a, WordId b) {
                          const Mass ca = chain.topic_word(k, a), cb = chain.topic_word(k, b);
                          return ca != cb ? ca > cb : a < b;
                        });
      for (std::size_t m = 0; m < keep && chain.topic_word(k, order[m]) > 0; ++m) {
        reps.push_back(order[m]);
      }
    }
    double total = 0.0;
    for (WordId r : reps) total += phi(k, r);
    std::vector<std::pair<WordId, double>> weighted;
    for (WordId r : reps) {
      const double p = total > 0.0 ? phi(k, r) / total : 0.0;
      weighted.emplace_back(r, p);
      if (dim > 0 && scope.has_vector[r]) {
        const double* v = scope.unit_vectors.data() + static_cast<std::size_t>(r) * dim;
        for (std::size_t i = 0; i < dim; ++i) centroids[s][i] += p * v[i];
      }
    }
    cache.representatives.push_back(std::move(weighted));
  }

  std::vector<std::size_t> rank(T);
  for (WordId w = 0; w < V; ++w) {
    if (!cache.computed[w]) continue;
    if (dim > 0 && scope.has_vector[w]) {
      const double* v = scope.unit_vectors.data() + static_cast<std::size_t>(w) * dim;
      for (std::size_t s = 0; s < T; ++s) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += v[i] * centroids[s][i];
        cache.cv[s * V + w] = dot;
      }
    }
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      const double ca = cache.cv[a * V + w], cb = cache.cv[b * V + w];
      return ca != cb ? ca < cb : cache.topics[a] < cache.topics[b];
    });
    for (std::size_t r = 0; r < T; ++r) {
      cache.tilde[rank[r] * V + w] =
          T == 1 ? 1.0 : static_cast<double>(r) / static_cast<double>(T - 1);
    }
  }
  return cache;
}

}  // namespace qdtm
