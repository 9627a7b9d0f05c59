#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "qdtm/error.hpp"
#include "qdtm/metrics.hpp"
#include "qdtm/random.hpp"

using namespace qdtm;
using qdtm::test::id;
using qdtm::test::plain_corpus;

TEST_SUITE("metrics") {
  TEST_CASE("diversity") {
    CHECK(topic_diversity({{"a", "b"}, {"c", "d"}}) == doctest::Approx(1.0));
    CHECK(topic_diversity({{"a", "b"}, {"a", "b"}}) == doctest::Approx(0.5));
    CHECK(topic_diversity({{"a", "b", "c"}, {"c", "d"}}) == doctest::Approx(0.8));
    CHECK_THROWS_AS(topic_diversity({}), ParameterError);
    CHECK_THROWS_AS(topic_diversity({{}, {}}), ParameterError);
  }

  TEST_CASE("cohesion is the cosine of the topic embeddings") {
    const double r = std::numbers::pi / 3.0;
    CHECK(topic_cohesion({1.0, 0.0}, {std::cos(r), std::sin(r)}) == doctest::Approx(0.5));
    CHECK(topic_cohesion({2.0, 0.0}, {3.0, 0.0}) == doctest::Approx(1.0));
  }

  TEST_CASE("overall quality is diversity times cohesion") {
    struct Row {
      double diversity, cohesion, overall;
    };
    const Row rows[] = {{0.94, 0.54, 0.51}, {0.93, 0.53, 0.49}, {0.86, 0.49, 0.42},
                        {0.71, 0.79, 0.56}, {0.68, 0.79, 0.54}, {0.74, 0.76, 0.56}};
    for (const auto& row : rows) {
      CHECK(std::abs(overall_quality(row.diversity, row.cohesion) - row.overall) <= 0.01);
    }
  }

  TEST_CASE("topic embedding weights renormalize over embedded words") {
    const Corpus c = plain_corpus({"a b c"});
    std::istringstream vectors("a 1 0\nb 0 1\n");
    const auto t = load_embeddings(vectors, c.vocabulary());
    const auto e = topic_embedding(t, c.vocabulary(), {{"a", 0.3}, {"c", 0.5}, {"b", 0.1}});
    REQUIRE(e);
    CHECK((*e)[0] == doctest::Approx(0.75));
    CHECK((*e)[1] == doctest::Approx(0.25));
    // Only the first top_n words count.
    const auto first = topic_embedding(t, c.vocabulary(), {{"a", 0.3}, {"b", 0.1}}, 1);
    REQUIRE(first);
    CHECK((*first)[1] == 0.0);
    CHECK(!topic_embedding(t, c.vocabulary(), {{"c", 1.0}, {"zz", 1.0}}));
  }

  TEST_CASE("NPMI near zero for independent words") {
    Rng rng(31);
    std::vector<std::string> texts;
    for (int d = 0; d < 10000; ++d) {
      std::string t = "z";
      if (rng.bernoulli(0.5)) t += " a";
      if (rng.bernoulli(0.5)) t += " b";
      texts.push_back(t);
    }
    const Corpus c = plain_corpus(texts);
    const auto s = npmi_coherence(c, std::vector<WordId>{id(c, "a"), id(c, "b")});
    REQUIRE(s);
    CHECK(std::abs(*s) < 0.05);
  }

  TEST_CASE("NPMI sign follows co-occurrence") {
    std::vector<std::string> texts;
    for (int d = 0; d < 200; ++d) texts.push_back(d % 2 ? "a b" : "c d");
    const Corpus c = plain_corpus(texts);
    const auto apart = npmi_coherence(c, std::vector<WordId>{id(c, "a"), id(c, "c")});
    const auto together = npmi_coherence(c, std::vector<WordId>{id(c, "a"), id(c, "b")});
    REQUIRE(apart);
    REQUIRE(together);
    CHECK(*apart < 0.0);
    CHECK(*together > 0.9);
    // Smoothed by hand: P(a) = P(b) = 101/202, P(a,b) = 101/202.
    const double p = 101.0 / 202.0;
    CHECK(*together == doctest::Approx(std::log(p / (p * p)) / -std::log(p)));
    CHECK(!npmi_coherence(c, std::vector<WordId>{id(c, "a")}));
    CHECK(npmi_coherence(c, std::vector<WeightedWord>{{"a", 1}, {"zz", 1}, {"b", 1}}) == together);
  }

  TEST_CASE("subtopic report") {
    const Corpus c = plain_corpus({"a b c", "a d e", "b e"});
    std::istringstream vectors("a 1 0\nb 1 0\nc 0 1\nd 0 1\n");
    const auto t = load_embeddings(vectors, c.vocabulary());
    QueryResult r;
    r.query = "a";
    r.parent.top_words = {{"a", 0.5}, {"b", 0.5}};
    TopicSummary s1, s2;
    s1.top_words = {{"a", 0.6}, {"b", 0.4}};
    s1.prevalence = 0.2;
    s2.top_words = {{"c", 0.6}, {"d", 0.4}};
    s2.prevalence = 0.1;
    r.subtopics = {s1, s2};
    const auto report = subtopic_report(r, c, &t);
    CHECK(report.diversity == doctest::Approx(1.0));
    REQUIRE(report.subtopics.size() == 2);
    CHECK(*report.subtopics[0].cohesion == doctest::Approx(1.0));
    CHECK(*report.subtopics[1].cohesion == doctest::Approx(0.0));
    CHECK(*report.cohesion == doctest::Approx(0.5));
    CHECK(*report.overall == doctest::Approx(0.5));
    CHECK(report.subtopics[1].prevalence == 0.1);

    const auto bare = subtopic_report(r, c, nullptr);
    CHECK(!bare.cohesion);
    CHECK(!bare.overall);
  }

  TEST_CASE("ranking by weight is stable") {
    CHECK(rank_by_weight({0.1, 0.5, 0.5, 0.2}) == std::vector<std::size_t>{1, 2, 3, 0});
  }
}
