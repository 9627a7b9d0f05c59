#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "qdtm/error.hpp"
#include "qdtm/sampler.hpp"

using namespace qdtm;
using namespace qdtm::test;

namespace {

Hyperparameters hyper() {
  Hyperparameters h;
  h.alpha = 1.0;
  h.beta = 0.5;
  h.gamma = 1.5;
  return h;
}

// Random unit vectors for every word.
void add_vectors(ChainScope& scope, std::size_t dim, Rng& rng) {
  scope.embedding_dim = dim;
  scope.unit_vectors.assign(scope.vocabulary_size * dim, 0.0);
  scope.has_vector.assign(scope.vocabulary_size, 1);
  for (std::size_t w = 0; w < scope.vocabulary_size; ++w) {
    double n = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double x = rng.normal();
      scope.unit_vectors[w * dim + i] = x;
      n += x * x;
    }
    for (std::size_t i = 0; i < dim; ++i) scope.unit_vectors[w * dim + i] /= std::sqrt(n);
  }
}

void set_angle(ChainScope& scope, WordId w, double radians) {
  scope.unit_vectors[w * 2] = std::cos(radians);
  scope.unit_vectors[w * 2 + 1] = std::sin(radians);
  scope.has_vector[w] = 1;
}

MicroState phase1_state(std::uint64_t seed, std::size_t docs = 40) {
  Rng rng(seed);
  MicroOptions o;
  o.vocabulary = 30;
  o.documents = docs;
  o.min_length = 5;
  o.max_length = 25;
  o.reserved = 2;
  o.ordinary_topics = 4;
  o.concepts = 4;
  o.related = 4;
  auto s = random_micro_state(rng, o);
  add_vectors(s.scope, 8, rng);
  return s;
}

bool same_state(const HdpChain& a, const HdpChain& b) {
  const auto sa = a.snapshot(), sb = b.snapshot();
  return sa.table_topics == sb.table_topics && sa.token_tables == sb.token_tables &&
         sa.flags == sb.flags && sa.rng_state == sb.rng_state && sa.iterations == sb.iterations;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("initialization seats every token alone") {
    auto s = phase1_state(1);
    HdpChain chain(s.scope, hyper(), 9);
    chain.initialize(6);
    CHECK(chain.audit().ok());
    for (std::size_t d = 0; d < s.scope.documents.size(); ++d) {
      const auto& words = s.scope.documents[d];
      CHECK(chain.tables(d).size() == words.size());
      TopicId shared = kNoTopic;
      for (std::size_t i = 0; i < words.size(); ++i) {
        CHECK(chain.token_table(d, i) == i);
        CHECK(!chain.token_flag(d, i));
        if (s.scope.anchored(words[i])) {
          CHECK(chain.token_topic(d, i) == s.scope.anchor[words[i]]);
        } else {
          if (shared == kNoTopic) shared = chain.token_topic(d, i);
          CHECK(chain.token_topic(d, i) == shared);
          CHECK(shared >= 2);
          CHECK(shared < 6);
        }
      }
    }
    CHECK_THROWS_AS(chain.initialize(2), ParameterError);
  }

  TEST_CASE("predictive probability") {
    ChainScope scope;
    scope.vocabulary_size = 100;
    std::vector<WordId> doc(50);
    for (WordId i = 0; i < 48; ++i) doc[i] = 10 + i;
    doc[48] = 3;
    doc[49] = 3;
    scope.documents = {doc};
    HdpChain chain(scope, hyper(), 1);
    chain.assign({{0}}, {std::vector<std::uint32_t>(50, 0)}, {std::vector<std::uint8_t>(50, 0)});
    CHECK(chain.predictive(0, 3) == doctest::Approx(0.025));
    CHECK(chain.predictive(0, 5) == doctest::Approx(0.005));
    CHECK(chain.new_topic_density() == doctest::Approx(0.01));
    // An empty topic predicts uniformly: β / (Vβ).
    ChainScope empty;
    empty.vocabulary_size = 100;
    empty.reserved_topics = 1;
    empty.anchor.assign(100, kNoTopic);
    empty.anchor[0] = 0;
    empty.documents = {{1}};
    HdpChain other(empty, hyper(), 1);
    other.assign({{1}}, {{0}}, {{0}});
    CHECK(other.live(0));
    CHECK(other.effective_tables(0) == 1.0);
    CHECK(other.predictive(0, 7) == doctest::Approx(0.01));
  }

  TEST_CASE("weights match the reference on random states") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = phase1_state(seed, 6);
      const auto h = hyper();
      auto chain = chain_for(s, h, 1);
      const std::size_t doc = seed % s.scope.documents.size();
      const std::size_t pos = seed % s.scope.documents[doc].size();
      const auto o = oracle_weights(s, h, doc, pos);
      chain.remove_token(doc, pos);
      const WordId w = s.scope.documents[doc][pos];
      const auto tw = chain.table_weights(doc, w);
      REQUIRE(tw.tables == o.tables);
      for (std::size_t i = 0; i < o.table.size(); ++i) CHECK(tw.weights[i] == doctest::Approx(o.table[i]));
      CHECK(tw.new_table == doctest::Approx(o.new_table));
      const auto kw = chain.topic_weights(w);
      REQUIRE(kw.topics == o.topics);
      for (std::size_t i = 0; i < o.topic.size(); ++i) CHECK(kw.weights[i] == doctest::Approx(o.topic[i]));
      CHECK(kw.new_topic == doctest::Approx(o.new_topic));
    }
  }

  TEST_CASE("table and topic draws follow the exact distribution") {
    for (std::uint64_t seed = 11; seed <= 13; ++seed) {
      const auto s = phase1_state(seed, 5);
      for (std::size_t pos : {0u, 2u}) {
        const auto t = check_table_draws(s, hyper(), 1, pos, 100000, seed);
        CHECK(t.max_gap < 0.01);
        const auto k = check_topic_draws(s, hyper(), 1, pos, 100000, seed + 100);
        CHECK(k.max_gap < 0.01);
      }
    }
  }

  TEST_CASE("alpha zero never opens a table while one is compatible") {
    ChainScope scope;
    scope.vocabulary_size = 4;
    scope.documents = {{0, 1, 2}};
    auto h = hyper();
    h.alpha = 0.0;
    HdpChain chain(scope, h, 3);
    chain.assign({{0, 1}}, {{0, 0, 1}}, {{0, 0, 0}});
    chain.remove_token(0, 2);
    CHECK(chain.table_weights(0, 2).new_table == 0.0);
    for (int i = 0; i < 1000; ++i) CHECK(!chain.draw_table(0, 2).fresh);
  }

  TEST_CASE("vanishing gamma") {
    ChainScope scope;
    scope.vocabulary_size = 5;
    scope.documents = {{0, 1}, {2, 3}};
    auto h = hyper();
    h.gamma = 1e-12;
    HdpChain chain(scope, h, 3);
    chain.assign({{0}, {1, 0}}, {{0, 0}, {0, 1}}, {{0, 0}, {0, 0}});
    const auto kw = chain.topic_weights(4);
    CHECK(kw.new_topic < 1e-12);
    // The new-table likelihood becomes the table-weighted topic mixture.
    const double mix = (2.0 * chain.predictive(0, 4) + 1.0 * chain.predictive(1, 4)) / 3.0;
    CHECK(chain.new_table_likelihood(4) == doctest::Approx(mix));
  }

  TEST_CASE("concept words stay on their anchor topic") {
    auto s = phase1_state(4, 10);
    const auto h = hyper();
    auto chain = chain_for(s, h, 2);
    for (std::size_t d = 0; d < s.scope.documents.size(); ++d) {
      for (std::size_t i = 0; i < s.scope.documents[d].size(); ++i) {
        const WordId w = s.scope.documents[d][i];
        if (!s.scope.anchored(w)) continue;
        chain.remove_token(d, i);
        const auto kw = chain.topic_weights(w);
        CHECK(kw.new_topic == 0.0);
        for (std::size_t j = 0; j < kw.topics.size(); ++j) {
          if (kw.topics[j] != s.scope.anchor[w]) CHECK(kw.weights[j] == 0.0);
        }
        for (int r = 0; r < 50; ++r) CHECK(chain.draw_topic(w).topic == s.scope.anchor[w]);
        chain.add_token(d, i, s.token_tables[d][i], s.table_topics[d][s.token_tables[d][i]],
                        s.flags[d][i] != 0);
      }
    }
    CHECK(chain.audit().ok());
    // A reserved topic without anchored words cannot be opened.
    ChainScope scope;
    scope.vocabulary_size = 3;
    scope.reserved_topics = 1;
    scope.documents = {{2}};
    HdpChain bare(scope, h, 1);
    CHECK_THROWS_AS(bare.assign({{0}}, {{0}}, {{0}}), ParameterError);
    CHECK_THROWS_AS(bare.add_token(0, 0, 0, 0, false), ParameterError);
  }

  TEST_CASE("cohesion with one representative word is its cosine") {
    ChainScope scope;
    scope.vocabulary_size = 4;
    scope.embedding_dim = 2;
    scope.unit_vectors.assign(8, 0.0);
    scope.has_vector.assign(4, 0);
    // Word 0 at angle 0; representatives at cosines 0.2, 0.8 and 0.5.
    set_angle(scope, 0, 0.0);
    set_angle(scope, 1, std::acos(0.2));
    set_angle(scope, 2, std::acos(0.8));
    set_angle(scope, 3, std::acos(0.5));
    scope.documents = {{1, 1, 2, 2, 3, 3, 0}};
    auto h = hyper();
    h.representative_words = 1;
    HdpChain chain(scope, h, 1);
    chain.assign({{0, 1, 2}}, {{0, 0, 1, 1, 2, 2, 2}}, {{0, 0, 0, 0, 0, 0, 0}});
    const auto cache = compute_cohesion(chain);
    CHECK(cache.cohesion(0, 0) == doctest::Approx(0.2));
    CHECK(cache.cohesion(1, 0) == doctest::Approx(0.8));
    CHECK(cache.cohesion(2, 0) == doctest::Approx(0.5));
    CHECK(*cache.rank_value(0, 0) == doctest::Approx(0.0));
    CHECK(*cache.rank_value(1, 0) == doctest::Approx(1.0));
    CHECK(*cache.rank_value(2, 0) == doctest::Approx(0.5));
    CHECK(cache.cohesion(1, 2) == doctest::Approx(1.0));
    CHECK(!cache.rank_value(9, 0));
    CHECK_THROWS_AS(cache.cohesion(9, 0), LookupError);
  }

  TEST_CASE("a single live topic ranks every word at 1") {
    ChainScope scope;
    scope.vocabulary_size = 2;
    scope.documents = {{0, 1}};
    HdpChain chain(scope, hyper(), 1);
    chain.assign({{0}}, {{0, 0}}, {{0, 0}});
    const auto cache = compute_cohesion(chain);
    CHECK(*cache.rank_value(0, 1) == 1.0);
  }

  TEST_CASE("flag draws") {
    // Word 0 is promotable; three topics place it at rank values 0, 1 and 0.5.
    ChainScope scope;
    scope.vocabulary_size = 4;
    scope.embedding_dim = 2;
    scope.unit_vectors.assign(8, 0.0);
    scope.has_vector.assign(4, 0);
    set_angle(scope, 0, 0.0);
    set_angle(scope, 1, std::acos(0.2));
    set_angle(scope, 2, std::acos(0.8));
    set_angle(scope, 3, std::acos(0.5));
    scope.promotion.assign(4, {});
    scope.promotion[0] = {{0, kMassUnit}, {1, to_mass(0.3)}};
    scope.documents = {{1, 1, 2, 2, 3, 3, 0}};
    auto h = hyper();
    h.representative_words = 1;

    HdpChain chain(scope, h, 5);
    chain.assign({{0, 1, 2}}, {{0, 0, 1, 1, 2, 2, 2}}, {{0, 0, 0, 0, 0, 0, 0}});
    chain.refresh_cohesion();
    std::size_t on = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) on += chain.draw_flag(0, 2);
    CHECK(std::abs(static_cast<double>(on) / n - 0.5) < 0.02);
    for (int i = 0; i < 200; ++i) CHECK(!chain.draw_flag(0, 0));
    for (int i = 0; i < 200; ++i) CHECK(chain.draw_flag(0, 1));
    // A topic absent from the cache has rank value 0.
    CHECK(!chain.draw_flag(0, 7));
    CHECK(!chain.draw_flag(1, 1));

    auto off = h;
    off.word_filtering = false;
    HdpChain unfiltered(scope, off, 5);
    unfiltered.assign({{0, 1, 2}}, {{0, 0, 1, 1, 2, 2, 2}}, {{0, 0, 0, 0, 0, 0, 0}});
    CHECK(!unfiltered.filtering_active());
    for (int i = 0; i < 100; ++i) CHECK(unfiltered.draw_flag(0, 0));
    CHECK(!unfiltered.draw_flag(1, 0));

    auto plain = h;
    plain.use_gpu = false;
    HdpChain nogpu(scope, plain, 5);
    for (int i = 0; i < 100; ++i) CHECK(!nogpu.draw_flag(0, 1));
  }

  TEST_CASE("a promoted token adds its whole row") {
    ChainScope scope;
    scope.vocabulary_size = 3;
    scope.promotion.assign(3, {});
    scope.promotion[0] = {{0, kMassUnit}, {1, to_mass(0.3)}, {2, to_mass(0.3)}};
    scope.documents = {{0, 1}};
    HdpChain chain(scope, hyper(), 1);
    chain.assign({{0}}, {{0, 0}}, {{0, 0}});
    chain.remove_token(0, 0);
    const Mass before = chain.topic_mass(0);
    chain.add_token(0, 0, 0, 0, true);
    CHECK(to_real(chain.topic_mass(0) - before) == doctest::Approx(1.6));
    CHECK(to_real(chain.topic_word(0, 0)) == doctest::Approx(1.0));
    CHECK(to_real(chain.topic_word(0, 1)) == doctest::Approx(1.3));
    CHECK(to_real(chain.topic_word(0, 2)) == doctest::Approx(0.3));
    CHECK(to_real(chain.tables(0)[0].mass) == doctest::Approx(2.6));
    CHECK(chain.audit().ok());
  }

  TEST_CASE("unpromoted add and remove round-trips exactly") {
    const auto s = phase1_state(6, 8);
    auto chain = chain_for(s, hyper(), 1);
    for (std::size_t d = 0; d < s.scope.documents.size(); ++d) {
      for (std::size_t i = 0; i < s.scope.documents[d].size(); ++i) {
        const auto t = chain.token_table(d, i);
        const auto k = chain.token_topic(d, i);
        const bool flag = chain.token_flag(d, i);
        const Mass nk = chain.topic_mass(k);
        chain.remove_token(d, i);
        chain.add_token(d, i, t, k, flag);
        CHECK(chain.topic_mass(k) == nk);
      }
    }
    const auto reference = chain_for(s, hyper(), 1);
    for (TopicId k : reference.live_topics()) {
      CHECK(chain.topic_mass(k) == reference.topic_mass(k));
      for (WordId w = 0; w < s.scope.vocabulary_size; ++w) {
        CHECK(chain.topic_word(k, w) == reference.topic_word(k, w));
      }
    }
    CHECK(chain.audit().ok());
  }

  TEST_CASE("emptying a table drops its topic's table count") {
    ChainScope scope;
    scope.vocabulary_size = 3;
    scope.documents = {{0, 1}, {2}};
    HdpChain chain(scope, hyper(), 1);
    chain.assign({{0, 1}, {1}}, {{0, 1}, {0}}, {{0, 0}, {0}});
    CHECK(chain.tables_of(1) == 2);
    CHECK(chain.total_tables() == 3);
    chain.remove_token(0, 1);
    CHECK(chain.tables_of(1) == 1);
    CHECK(chain.total_tables() == 2);
    CHECK(chain.live(1));
    chain.remove_token(1, 0);
    CHECK(!chain.live(1));
    CHECK(chain.live_topic_count() == 1);
  }

  TEST_CASE("same seed, same chain") {
    const auto s = phase1_state(7);
    auto a = chain_for(s, hyper(), 99);
    auto b = chain_for(s, hyper(), 99);
    a.run(15);
    b.run(15);
    CHECK(same_state(a, b));
    auto c = chain_for(s, hyper(), 100);
    c.run(15);
    CHECK(!same_state(a, c));
  }

  TEST_CASE("bookkeeping stays consistent over a run") {
    const auto s = phase1_state(8);
    auto chain = chain_for(s, hyper(), 4);
    std::size_t failures = 0;
    chain.run(30, [&](const HdpChain& c, std::size_t) {
      if (!c.audit().ok()) ++failures;
    });
    CHECK(failures == 0);
    CHECK(chain.iterations_done() == 30);
  }

  TEST_CASE("resuming from a snapshot matches an uninterrupted run") {
    const auto s = phase1_state(9);
    auto straight = chain_for(s, hyper(), 17);
    straight.run(20);

    auto first = chain_for(s, hyper(), 17);
    first.run(8);
    const auto snap = first.snapshot();
    HdpChain resumed(s.scope, hyper(), 0);
    resumed.restore(snap);
    CHECK(resumed.audit().ok());
    resumed.run(12);
    CHECK(same_state(straight, resumed));
  }

  TEST_CASE("scope validation") {
    ChainScope scope;
    CHECK_THROWS_AS(HdpChain(scope, hyper(), 1), ParameterError);
    scope.vocabulary_size = 2;
    scope.documents = {{0, 5}};
    CHECK_THROWS_AS(HdpChain(scope, hyper(), 1), ParameterError);
    scope.documents = {{0, 1}};
    scope.anchor = {0, kNoTopic};
    CHECK_THROWS_AS(HdpChain(scope, hyper(), 1), ParameterError);
    Hyperparameters h;
    CHECK_NOTHROW(h.validate(1));
    h.initial_topics = 1;
    CHECK_THROWS_AS(h.validate(1), ParameterError);
    h = Hyperparameters{};
    h.u = 1.0;
    CHECK_THROWS_AS(h.validate(1), ParameterError);
  }
}
