#include "qdtm/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "qdtm/error.hpp"
#include "qdtm/io.hpp"

namespace qdtm {

using json = nlohmann::ordered_json;

namespace {

void unit_vectors(const EmbeddingTable& embeddings, const std::vector<WordId>& words,
                  ChainScope& scope) {
  const std::size_t dim = embeddings.dimension();
  scope.embedding_dim = dim;
  scope.unit_vectors.assign(words.size() * dim, 0.0);
  scope.has_vector.assign(words.size(), 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!embeddings.has(words[i])) continue;
    auto v = embeddings.vector(words[i]);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) continue;
    norm = std::sqrt(norm);
    for (std::size_t d = 0; d < dim; ++d) scope.unit_vectors[i * dim + d] = v[d] / norm;
    scope.has_vector[i] = 1;
  }
}

std::vector<WordId> identity_words(std::size_t n) {
  std::vector<WordId> words(n);
  std::iota(words.begin(), words.end(), 0);
  return words;
}

std::optional<WordId> local_id(const std::vector<WordId>& words, WordId global) {
  auto it = std::lower_bound(words.begin(), words.end(), global);
  if (it == words.end() || *it != global) return std::nullopt;
  return static_cast<WordId>(it - words.begin());
}

std::vector<WordId> top_words_of(const HdpChain& chain, TopicId k, std::size_t n) {
  const std::size_t V = chain.scope().vocabulary_size;
  std::vector<WordId> support;
  for (WordId w = 0; w < V; ++w) {
    if (chain.topic_word(k, w) > 0) support.push_back(w);
  }
  const std::size_t keep = std::min(n, support.size());
  std::partial_sort(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(keep),
                    support.end(), [&](WordId a, WordId b) {
                      const Mass ca = chain.topic_word(k, a), cb = chain.topic_word(k, b);
                      return ca != cb ? ca > cb : a < b;
                    });
  support.resize(keep);
  return support;
}

json hyper_to_json(const Hyperparameters& h) {
  return {{"alpha", h.alpha},
          {"beta", h.beta},
          {"gamma", h.gamma},
          {"initial_topics", h.initial_topics},
          {"initial_subtopics", h.initial_subtopics},
          {"tau", h.tau},
          {"u", h.u},
          {"representative_words", h.representative_words},
          {"prevalence_floor", h.prevalence_floor},
          {"gpu", h.use_gpu},
          {"word_filtering", h.word_filtering}};
}

Hyperparameters hyper_from_json(const json& j) {
  Hyperparameters h;
  h.alpha = j.at("alpha").get<double>();
  h.beta = j.at("beta").get<double>();
  h.gamma = j.at("gamma").get<double>();
  h.initial_topics = j.at("initial_topics").get<std::size_t>();
  h.initial_subtopics = j.at("initial_subtopics").get<std::size_t>();
  h.tau = j.at("tau").get<double>();
  h.u = j.at("u").get<double>();
  h.representative_words = j.at("representative_words").get<std::size_t>();
  h.prevalence_floor = j.at("prevalence_floor").get<double>();
  h.use_gpu = j.at("gpu").get<bool>();
  h.word_filtering = j.at("word_filtering").get<bool>();
  return h;
}

json expansion_to_json(const ExpansionOptions& e) {
  return {{"method", std::string(to_string(e.method))},
          {"n", e.count},
          {"exclude_query_terms", e.exclude_query_terms},
          {"lambda", e.lambda},
          {"topk", e.similarity_cutoff}};
}

ExpansionOptions expansion_from_json(const json& j) {
  ExpansionOptions e;
  e.method = parse_expansion_method(j.at("method").get<std::string>());
  e.count = j.at("n").get<std::size_t>();
  e.exclude_query_terms = j.at("exclude_query_terms").get<bool>();
  e.lambda = j.at("lambda").get<double>();
  e.similarity_cutoff = j.at("topk").get<std::size_t>();
  return e;
}

json words_to_json(const std::vector<WeightedWord>& words) {
  json a = json::array();
  for (const auto& w : words) a.push_back(json::array({w.token, w.weight}));
  return a;
}

std::vector<WeightedWord> words_from_json(const json& j) {
  std::vector<WeightedWord> out;
  for (const auto& e : j) out.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
  return out;
}

json summary_to_json(const TopicSummary& s) {
  return {{"topic", s.id},
          {"top_words", words_to_json(s.top_words)},
          {"prevalence", s.prevalence},
          {"tokens", s.tokens}};
}

TopicSummary summary_from_json(const json& j) {
  TopicSummary s;
  s.id = j.at("topic").get<TopicId>();
  s.top_words = words_from_json(j.at("top_words"));
  s.prevalence = j.at("prevalence").get<double>();
  s.tokens = j.at("tokens").get<std::size_t>();
  return s;
}

json fingerprint(const Corpus& corpus, const std::vector<ConceptWordSet>& concepts,
                 const FitOptions& options, const std::string& extra) {
  json c = json::array();
  for (const auto& set : concepts) c.push_back(set.ids());
  return {{"documents", corpus.size()},
          {"tokens", corpus.vocabulary().total_tokens()},
          {"vocabulary", corpus.vocabulary().size()},
          {"concepts", c},
          {"hyper", hyper_to_json(options.hyper)},
          {"seed", options.seed},
          {"iterations", options.iterations_phase1},
          {"extra", extra}};
}

}  // namespace

void FitOptions::validate(std::size_t queries) const {
  if (queries == 0) throw ParameterError("at least one query is required");
  hyper.validate(queries);
  if (iterations_phase1 < 1 || iterations_phase2 < 1) {
    throw ParameterError("iteration counts must be at least 1");
  }
  if (retrieval_cutoff < 1) throw ParameterError("retrieval cutoff must be at least 1");
  if (smoothing < 0.0) throw ParameterError("smoothing mass mu must be non-negative");
  if (expansion.count < 1) throw ParameterError("concept word count must be at least 1");
  if (!(expansion.lambda >= 0.0 && expansion.lambda <= 1.0)) {
    throw ParameterError("lambda must lie in [0, 1]");
  }
  if (expansion.similarity_cutoff < 1) throw ParameterError("similarity cutoff must be at least 1");
  if (threads < 1) throw ParameterError("thread count must be at least 1");
  if (top_words < 1) throw ParameterError("top word count must be at least 1");
}

std::vector<ConceptWordSet> expand_queries(const Corpus& corpus, const std::vector<QuerySpec>& queries,
                                           const FitOptions& options,
                                           const EmbeddingTable* embeddings) {
  std::vector<ConceptWordSet> out;
  for (const auto& spec : queries) {
    const Query q = make_query(corpus, spec.phrase, spec.mode);
    out.push_back(extract_concept_words(corpus, q, options.retrieval_cutoff, options.smoothing,
                                        options.expansion, embeddings));
  }
  return out;
}

std::vector<std::vector<PromotionTarget>> promotion_rows(const EmbeddingTable& embeddings,
                                                         const std::vector<WordId>& words,
                                                         const std::vector<WordId>& concepts,
                                                         double tau, double u) {
  std::vector<WordId> inside;
  for (WordId c : concepts) {
    if (local_id(words, c)) inside.push_back(c);
  }
  std::vector<std::vector<PromotionTarget>> rows(words.size());
  if (inside.empty()) return rows;
  const auto promotion = build_promotion(build_relatedness(embeddings, inside, tau), u);
  for (WordId i = 0; i < words.size(); ++i) {
    const WordId w = words[i];
    auto& row = rows[i];
    bool self = false;
    for (const auto& e : promotion.row(w)) {
      const auto c = local_id(words, e.concept_word);
      if (!c) continue;
      row.push_back({*c, to_mass(e.amount)});
      self = self || e.concept_word == w;
    }
    // A promoted token keeps its own unit even when it is not a concept word.
    if (!row.empty() && !self) row.push_back({i, kMassUnit});
    std::sort(row.begin(), row.end(),
              [](const PromotionTarget& a, const PromotionTarget& b) { return a.word < b.word; });
  }
  return rows;
}

ChainScope phase1_scope(const Corpus& corpus, const std::vector<ConceptWordSet>& concepts,
                        const EmbeddingTable* embeddings, const Hyperparameters& hyper) {
  ChainScope scope;
  const std::size_t V = corpus.vocabulary().size();
  scope.vocabulary_size = V;
  for (const auto& doc : corpus.documents()) scope.documents.push_back(doc.tokens);
  scope.reserved_topics = concepts.size();
  scope.anchor.assign(V, kNoTopic);
  std::vector<WordId> all_concepts;
  for (std::size_t q = 0; q < concepts.size(); ++q) {
    std::vector<WordId> reps;
    for (WordId w : concepts[q].ids()) {
      if (!corpus.vocabulary().contains(w)) {
        spdlog::warn("concept word id {} is not in the vocabulary; skipped", w);
        continue;
      }
      if (scope.anchor[w] == kNoTopic) {
        scope.anchor[w] = static_cast<TopicId>(q);
      } else {
        spdlog::warn("concept word '{}' belongs to several queries; pinned to the first",
                     corpus.vocabulary().token(w));
      }
      reps.push_back(w);
      all_concepts.push_back(w);
    }
    scope.reserved_representatives.push_back(std::move(reps));
  }
  if (embeddings != nullptr) {
    const auto words = identity_words(V);
    unit_vectors(*embeddings, words, scope);
    if (hyper.use_gpu) {
      std::sort(all_concepts.begin(), all_concepts.end());
      all_concepts.erase(std::unique(all_concepts.begin(), all_concepts.end()), all_concepts.end());
      scope.promotion = promotion_rows(*embeddings, words, all_concepts, hyper.tau, hyper.u);
    }
  }
  return scope;
}

std::size_t SubCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : tokens) n += d.size();
  return n;
}

SubCorpus extract_parent_subcorpus(const HdpChain& chain, TopicId parent) {
  SubCorpus sub;
  sub.parent = parent;
  const auto& docs = chain.scope().documents;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<WordId> kept;
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      if (chain.token_topic(d, i) == parent) kept.push_back(docs[d][i]);
    }
    if (kept.empty()) continue;
    sub.words.insert(sub.words.end(), kept.begin(), kept.end());
    sub.documents.push_back(d);
    sub.tokens.push_back(std::move(kept));
  }
  if (sub.documents.empty()) {
    throw EmptyResultError("parent topic " + std::to_string(parent) +
                           " not found: no token was assigned to it; try more iterations or a "
                           "different query");
  }
  std::sort(sub.words.begin(), sub.words.end());
  sub.words.erase(std::unique(sub.words.begin(), sub.words.end()), sub.words.end());
  return sub;
}

ChainScope phase2_scope(const SubCorpus& sub, const ConceptWordSet& concepts,
                        const EmbeddingTable* embeddings, const Hyperparameters& hyper) {
  ChainScope scope;
  scope.vocabulary_size = sub.words.size();
  for (const auto& doc : sub.tokens) {
    std::vector<WordId> local;
    local.reserve(doc.size());
    for (WordId w : doc) local.push_back(*local_id(sub.words, w));
    scope.documents.push_back(std::move(local));
  }
  if (embeddings != nullptr) {
    unit_vectors(*embeddings, sub.words, scope);
    if (hyper.use_gpu) {
      auto ids = concepts.ids();
      std::sort(ids.begin(), ids.end());
      scope.promotion = promotion_rows(*embeddings, sub.words, ids, hyper.tau, hyper.u);
    }
  }
  return scope;
}

std::vector<double> topic_word_distribution(const HdpChain& chain, TopicId k) {
  const std::size_t V = chain.scope().vocabulary_size;
  std::vector<double> phi(V);
  for (WordId w = 0; w < V; ++w) phi[w] = chain.predictive(k, w);
  return phi;
}

std::vector<double> document_topic_distribution(const HdpChain& chain, std::size_t doc) {
  const auto topics = chain.live_topics();
  const auto mass = chain.document_topic_mass(doc);
  const double alpha = chain.hyperparameters().alpha;
  const double prior = alpha / static_cast<double>(topics.size());
  double total = 0.0;
  for (TopicId k : topics) total += mass[k];
  std::vector<double> theta;
  theta.reserve(topics.size());
  for (TopicId k : topics) theta.push_back((mass[k] + prior) / (total + alpha));
  return theta;
}

TopicSummary summarize_topic(const HdpChain& chain, TopicId k, const Vocabulary& vocabulary,
                             const std::vector<WordId>& words, std::size_t top_n,
                             std::size_t corpus_tokens) {
  TopicSummary s;
  s.id = k;
  for (WordId w : top_words_of(chain, k, top_n)) {
    const WordId global = words.empty() ? w : words[w];
    s.top_words.push_back({vocabulary.token(global), chain.predictive(k, w)});
  }
  const auto counts = chain.tokens_per_topic();
  s.tokens = k < counts.size() ? counts[k] : 0;
  s.prevalence = static_cast<double>(s.tokens) / static_cast<double>(corpus_tokens);
  return s;
}

SubtopicSet run_phase2(const SubCorpus& sub, const Corpus& corpus, const ConceptWordSet& concepts,
                       const EmbeddingTable* embeddings, const Hyperparameters& hyper,
                       std::size_t iterations, std::uint64_t seed, std::size_t top_words,
                       const TopicSummary& parent) {
  const Vocabulary& vocab = corpus.vocabulary();
  const std::size_t corpus_tokens = vocab.total_tokens();
  SubtopicSet out;
  out.words = sub.words;

  if (sub.words.size() == 1) {
    // Every subtopic over a single word type is the same point mass.
    TopicSummary s;
    s.top_words.push_back({vocab.token(sub.words[0]), 1.0});
    s.tokens = sub.token_count();
    s.prevalence = static_cast<double>(s.tokens) / static_cast<double>(corpus_tokens);
    out.subtopics.push_back(std::move(s));
    out.phi.push_back({1.0});
    return out;
  }

  HdpChain chain(phase2_scope(sub, concepts, embeddings, hyper), hyper, seed);
  chain.initialize(std::max<std::size_t>(hyper.initial_subtopics, 1));
  chain.run(iterations);
  const auto audit = chain.audit();
  if (!audit.ok()) throw ConsistencyError("second phase audit failed: " + audit.detail);

  const auto counts = chain.tokens_per_topic();
  std::vector<TopicId> survivors;
  for (TopicId k : chain.live_topics()) {
    const double prevalence = static_cast<double>(counts[k]) / static_cast<double>(corpus_tokens);
    if (prevalence >= hyper.prevalence_floor) {
      survivors.push_back(k);
    } else {
      ++out.pruned;
    }
  }
  std::stable_sort(survivors.begin(), survivors.end(),
                   [&](TopicId a, TopicId b) { return counts[a] > counts[b]; });
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    TopicSummary s = summarize_topic(chain, survivors[i], vocab, sub.words, top_words, corpus_tokens);
    s.id = static_cast<TopicId>(i);
    out.subtopics.push_back(std::move(s));
    out.phi.push_back(topic_word_distribution(chain, survivors[i]));
  }
  if (out.subtopics.empty()) {
    spdlog::warn("every subtopic of parent topic {} fell below the prevalence floor {}; "
                 "reporting the parent as its only subtopic",
                 sub.parent, hyper.prevalence_floor);
    out.fallback = true;
    TopicSummary s = parent;
    s.id = 0;
    out.subtopics.push_back(std::move(s));
    std::vector<double> phi(sub.words.size(), 0.0);
    const double total = static_cast<double>(sub.token_count());
    for (const auto& doc : sub.tokens) {
      for (WordId g : doc) phi[*local_id(sub.words, g)] += 1.0 / total;
    }
    out.phi.push_back(std::move(phi));
  }
  return out;
}

TopicModelResult fit(const Corpus& corpus, const std::vector<QuerySpec>& queries,
                     const EmbeddingTable* embeddings, const FitOptions& options,
                     const std::optional<CheckpointOptions>& checkpoint,
                     const Phase1Callback& after_sweep) {
  options.validate(queries.size());
  if (options.expansion.method == ExpansionMethod::Rel && embeddings == nullptr) {
    throw ParameterError("REL expansion requires embeddings");
  }
  const auto concepts = expand_queries(corpus, queries, options, embeddings);
  return fit(corpus, queries, concepts, embeddings, options, checkpoint, after_sweep);
}

TopicModelResult fit(const Corpus& corpus, const std::vector<QuerySpec>& queries,
                     const std::vector<ConceptWordSet>& concepts, const EmbeddingTable* embeddings,
                     const FitOptions& options, const std::optional<CheckpointOptions>& checkpoint,
                     const Phase1Callback& after_sweep) {
  options.validate(queries.size());
  if (concepts.size() != queries.size()) {
    throw ParameterError("one concept word set per query expected");
  }
  const Vocabulary& vocab = corpus.vocabulary();
  const std::size_t corpus_tokens = vocab.total_tokens();
  const Hyperparameters& hyper = options.hyper;

  HdpChain chain(phase1_scope(corpus, concepts, embeddings, hyper), hyper, options.seed);
  std::string print;
  if (checkpoint) print = fingerprint(corpus, concepts, options, checkpoint->fingerprint).dump();
  if (checkpoint && checkpoint->resume && std::filesystem::exists(checkpoint->path)) {
    chain.restore(load_checkpoint(checkpoint->path, print));
    spdlog::info("resumed first phase at iteration {}", chain.iterations_done());
  } else {
    chain.initialize(hyper.initial_topics);
  }

  const std::size_t remaining =
      options.iterations_phase1 > chain.iterations_done()
          ? options.iterations_phase1 - chain.iterations_done()
          : 0;
  chain.run(remaining, [&](const HdpChain& c, std::size_t it) {
    if (checkpoint && checkpoint->every > 0 && it % checkpoint->every == 0) {
      save_checkpoint(checkpoint->path, c.snapshot(), print);
    }
    if (after_sweep) after_sweep(c, it);
  });
  if (checkpoint) save_checkpoint(checkpoint->path, chain.snapshot(), print);
  const auto audit = chain.audit();
  if (!audit.ok()) throw ConsistencyError("first phase audit failed: " + audit.detail);

  TopicModelResult result;
  auto& meta = result.metadata;
  meta.seed = options.seed;
  meta.iterations_phase1 = options.iterations_phase1;
  meta.iterations_phase2 = options.iterations_phase2;
  meta.hyper = hyper;
  meta.expansion = options.expansion;
  meta.retrieval_cutoff = options.retrieval_cutoff;
  meta.smoothing = options.smoothing;
  meta.corpus_documents = corpus.size();
  meta.corpus_tokens = corpus_tokens;
  meta.vocabulary_size = vocab.size();
  meta.live_topics = chain.live_topic_count();
  meta.embeddings = embeddings != nullptr;
  for (const auto& doc : corpus.documents()) result.documents.push_back(doc.id);

  const auto live = chain.live_topics();
  std::vector<std::vector<double>> theta;
  for (std::size_t d = 0; d < corpus.size(); ++d) theta.push_back(document_topic_distribution(chain, d));

  std::vector<SubCorpus> subs;
  result.queries.resize(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto& qr = result.queries[q];
    qr.query = queries[q].phrase;
    qr.mode = queries[q].mode;
    qr.method = concepts[q].method;
    for (const auto& c : concepts[q].words) qr.concept_words.push_back({vocab.token(c.word), c.score});
    const auto parent = static_cast<TopicId>(q);
    qr.parent = summarize_topic(chain, parent, vocab, {}, options.top_words, corpus_tokens);
    const auto slot = std::find(live.begin(), live.end(), parent);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      qr.document_weights.push_back(slot == live.end() ? 0.0 : theta[d][static_cast<std::size_t>(slot - live.begin())]);
    }
    try {
      subs.push_back(extract_parent_subcorpus(chain, parent));
    } catch (const EmptyResultError&) {
      throw EmptyResultError("parent topic for query '" + queries[q].phrase +
                             "' not found: no token was assigned to it; try more iterations or a "
                             "different query");
    }
  }

  std::vector<SubtopicSet> sets(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t q = next++; q < queries.size(); q = next++) {
      try {
        sets[q] = run_phase2(subs[q], corpus, concepts[q], embeddings, hyper,
                             options.iterations_phase2, derive_seed(options.seed, q + 1),
                             options.top_words, result.queries[q].parent);
      } catch (...) {
        errors[q] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(options.threads, queries.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto& qr = result.queries[q];
    qr.subtopics = std::move(sets[q].subtopics);
    qr.pruned_subtopics = sets[q].pruned;
    qr.subtopic_fallback = sets[q].fallback;
    if (options.full_posterior) {
      for (WordId w : sets[q].words) qr.subtopic_words.push_back(vocab.token(w));
      qr.subtopic_phi = std::move(sets[q].phi);
    }
  }

  for (TopicId k : live) {
    result.topics.push_back(summarize_topic(chain, k, vocab, {}, options.top_words, corpus_tokens));
    if (options.full_posterior) result.phi.push_back(topic_word_distribution(chain, k));
  }
  if (options.full_posterior) result.theta = std::move(theta);
  return result;
}

std::string result_to_json(const TopicModelResult& r, int indent) {
  const auto& m = r.metadata;
  json meta{{"version", m.version},
            {"seed", m.seed},
            {"iterations_phase1", m.iterations_phase1},
            {"iterations_phase2", m.iterations_phase2},
            {"hyperparameters", hyper_to_json(m.hyper)},
            {"expansion", expansion_to_json(m.expansion)},
            {"retrieval_cutoff", m.retrieval_cutoff},
            {"smoothing", m.smoothing},
            {"corpus_documents", m.corpus_documents},
            {"corpus_tokens", m.corpus_tokens},
            {"vocabulary_size", m.vocabulary_size},
            {"live_topics", m.live_topics},
            {"embeddings", m.embeddings}};
  json queries = json::array();
  for (const auto& q : r.queries) {
    json concept_words = json::array();
    for (const auto& c : q.concept_words) concept_words.push_back({{"token", c.token}, {"score", c.weight}});
    json parent = summary_to_json(q.parent);
    parent["doc_weights"] = q.document_weights;
    json subtopics = json::array();
    for (const auto& s : q.subtopics) subtopics.push_back(summary_to_json(s));
    json entry{{"query", q.query},
               {"mode", std::string(to_string(q.mode))},
               {"method", std::string(to_string(q.method))},
               {"concept_words", concept_words},
               {"parent", parent},
               {"subtopics", subtopics},
               {"pruned_subtopics", q.pruned_subtopics},
               {"subtopic_fallback", q.subtopic_fallback}};
    if (!q.subtopic_phi.empty()) {
      entry["subtopic_words"] = q.subtopic_words;
      entry["subtopic_phi"] = q.subtopic_phi;
    }
    queries.push_back(std::move(entry));
  }
  json topics = json::array();
  for (const auto& t : r.topics) topics.push_back(summary_to_json(t));
  json j{{"format", kResultFormat},
         {"metadata", meta},
         {"documents", r.documents},
         {"queries", queries},
         {"topics", topics}};
  if (!r.phi.empty()) j["phi"] = r.phi;
  if (!r.theta.empty()) j["theta"] = r.theta;
  return j.dump(indent) + "\n";
}

TopicModelResult result_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("result file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kResultFormat) {
    throw FormatError(std::string("result file lacks format tag ") + kResultFormat);
  }
  try {
    TopicModelResult r;
    const auto& meta = j.at("metadata");
    auto& m = r.metadata;
    m.version = meta.at("version").get<std::string>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.iterations_phase1 = meta.at("iterations_phase1").get<std::size_t>();
    m.iterations_phase2 = meta.at("iterations_phase2").get<std::size_t>();
    m.hyper = hyper_from_json(meta.at("hyperparameters"));
    m.expansion = expansion_from_json(meta.at("expansion"));
    m.retrieval_cutoff = meta.at("retrieval_cutoff").get<std::size_t>();
    m.smoothing = meta.at("smoothing").get<double>();
    m.corpus_documents = meta.at("corpus_documents").get<std::size_t>();
    m.corpus_tokens = meta.at("corpus_tokens").get<std::size_t>();
    m.vocabulary_size = meta.at("vocabulary_size").get<std::size_t>();
    m.live_topics = meta.at("live_topics").get<std::size_t>();
    m.embeddings = meta.at("embeddings").get<bool>();
    r.documents = j.at("documents").get<std::vector<std::string>>();
    for (const auto& e : j.at("queries")) {
      QueryResult q;
      q.query = e.at("query").get<std::string>();
      q.mode = parse_query_mode(e.at("mode").get<std::string>());
      q.method = parse_expansion_method(e.at("method").get<std::string>());
      for (const auto& c : e.at("concept_words")) {
        q.concept_words.push_back({c.at("token").get<std::string>(), c.at("score").get<double>()});
      }
      q.parent = summary_from_json(e.at("parent"));
      q.document_weights = e.at("parent").at("doc_weights").get<std::vector<double>>();
      for (const auto& s : e.at("subtopics")) q.subtopics.push_back(summary_from_json(s));
      q.pruned_subtopics = e.at("pruned_subtopics").get<std::size_t>();
      q.subtopic_fallback = e.at("subtopic_fallback").get<bool>();
      if (e.contains("subtopic_phi")) {
        q.subtopic_words = e.at("subtopic_words").get<std::vector<std::string>>();
        q.subtopic_phi = e.at("subtopic_phi").get<std::vector<std::vector<double>>>();
      }
      r.queries.push_back(std::move(q));
    }
    for (const auto& t : j.at("topics")) r.topics.push_back(summary_from_json(t));
    if (j.contains("phi")) r.phi = j.at("phi").get<std::vector<std::vector<double>>>();
    if (j.contains("theta")) r.theta = j.at("theta").get<std::vector<std::vector<double>>>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed result file: ") + e.what());
  }
}

void write_result(const std::filesystem::path& path, const TopicModelResult& result) {
  write_text_atomic(path, result_to_json(result));
}

TopicModelResult read_result(const std::filesystem::path& path) {
  return result_from_json(read_text(path));
}

void save_checkpoint(const std::filesystem::path& path, const HdpChain::Snapshot& s,
                     const std::string& fingerprint) {
  json tables = json::array();
  for (const auto& doc : s.table_topics) {
    json row = json::array();
    for (TopicId k : doc) row.push_back(k == kNoTopic ? -1 : static_cast<std::int64_t>(k));
    tables.push_back(std::move(row));
  }
  json j{{"format", kCheckpointFormat},
         {"fingerprint", fingerprint},
         {"iterations", s.iterations},
         {"rng", s.rng_state},
         {"table_topics", tables},
         {"token_tables", s.token_tables},
         {"flags", s.flags}};
  write_text_atomic(path, j.dump());
}

HdpChain::Snapshot load_checkpoint(const std::filesystem::path& path, const std::string& fingerprint) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw FormatError("checkpoint '" + path.string() + "' lacks format tag " + kCheckpointFormat);
  }
  if (j.value("fingerprint", "") != fingerprint) {
    throw ParameterError("checkpoint '" + path.string() + "' was written by a different run configuration");
  }
  try {
    HdpChain::Snapshot s;
    s.iterations = j.at("iterations").get<std::size_t>();
    s.rng_state = j.at("rng").get<std::string>();
    for (const auto& row : j.at("table_topics")) {
      std::vector<TopicId> doc;
      for (const auto& k : row) {
        const auto v = k.get<std::int64_t>();
        doc.push_back(v < 0 ? kNoTopic : static_cast<TopicId>(v));
      }
      s.table_topics.push_back(std::move(doc));
    }
    s.token_tables = j.at("token_tables").get<std::vector<std::vector<std::uint32_t>>>();
    s.flags = j.at("flags").get<std::vector<std::vector<std::uint8_t>>>();
    return s;
  } catch (const json::exception& e) {
    throw FormatError("malformed checkpoint '" + path.string() + "': " + e.what());
  }
}

}  // namespace qdtm
