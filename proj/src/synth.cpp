#include "qdtm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qdtm/error.hpp"
#include "qdtm/random.hpp"

namespace qdtm {

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::size_t draw_cumulative(const std::vector<double>& cumulative, Rng& rng) {
  const double target = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace

void SyntheticSpec::validate() const {
  if (topics < 2) throw ParameterError("synthetic corpus needs at least 2 topics");
  if (vocabulary < topics) throw ParameterError("vocabulary must be at least the topic count");
  if (documents < 1) throw ParameterError("synthetic corpus needs at least 1 document");
  if (doc_length < 2) throw ParameterError("mean document length must be at least 2");
  if (!(primary_share > 0.0 && primary_share <= 1.0)) {
    throw ParameterError("primary share must lie in (0, 1]");
  }
  if (!(noise >= 0.0 && noise < 1.0)) throw ParameterError("noise must lie in [0, 1)");
  if (!(rare_prevalence > 0.0 && rare_prevalence < 1.0)) {
    throw ParameterError("rare-topic prevalence must lie in (0, 1)");
  }
  // At least one expected rare token per 50 documents.
  if (rare_prevalence * 50.0 * static_cast<double>(doc_length) < 1.0) {
    throw ParameterError("rare-topic prevalence is below one expected occurrence per 50 documents");
  }
  if (rare_prevalence / primary_share > 1.0) {
    throw ParameterError("rare-topic prevalence exceeds what its documents can carry");
  }
  if (embedding_dim < 1) throw ParameterError("embedding dimension must be positive");
  if (embedding_noise < 0.0) throw ParameterError("embedding noise must be non-negative");
}

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticCorpus out;
  out.spec = spec;
  const std::size_t V = spec.vocabulary;
  const std::size_t T = spec.topics;

  const int width = static_cast<int>(std::to_string(V - 1).size());
  for (std::size_t w = 0; w < V; ++w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%0*zu", width, w);
    out.words.emplace_back(buf);
  }

  std::vector<std::size_t> perm(V);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  out.blocks.resize(T);
  for (std::size_t i = 0; i < V; ++i) out.blocks[i * T / V].push_back(perm[i]);

  out.topic_word.assign(T, std::vector<double>(V, spec.noise / static_cast<double>(V)));
  for (std::size_t t = 0; t < T; ++t) {
    const auto& block = out.blocks[t];
    double norm = 0.0;
    for (std::size_t r = 0; r < block.size(); ++r) {
      norm += 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
    }
    for (std::size_t r = 0; r < block.size(); ++r) {
      out.topic_word[t][block[r]] +=
          (1.0 - spec.noise) / std::pow(static_cast<double>(r + 1), spec.zipf_exponent) / norm;
    }
  }
  std::vector<std::vector<double>> cumulative(T);
  for (std::size_t t = 0; t < T; ++t) {
    cumulative[t].resize(V);
    std::partial_sum(out.topic_word[t].begin(), out.topic_word[t].end(), cumulative[t].begin());
  }

  const std::size_t D = spec.documents;
  const auto rare_docs = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.rare_prevalence * static_cast<double>(D) / spec.primary_share)),
      1, D);
  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  out.primary.assign(D, 0);
  out.secondary.assign(D, 0);
  std::vector<char> rare(D, 0);
  for (std::size_t i = 0; i < rare_docs; ++i) rare[order[i]] = 1;

  const std::size_t ordinary = T - 1;
  out.topic_tokens.assign(T, 0);
  for (std::size_t d = 0; d < D; ++d) {
    if (rare[d]) {
      out.primary[d] = out.rare_topic;
      out.secondary[d] = 1 + rng.index(ordinary);
    } else {
      out.primary[d] = 1 + rng.index(ordinary);
      if (ordinary == 1) {
        out.secondary[d] = out.primary[d];
      } else {
        std::size_t s = 1 + rng.index(ordinary - 1);
        if (s >= out.primary[d]) ++s;
        out.secondary[d] = s;
      }
    }
    const std::size_t L = spec.doc_length / 2 + rng.index(spec.doc_length + 1);
    std::string text;
    for (std::size_t i = 0; i < std::max<std::size_t>(L, 1); ++i) {
      const std::size_t t = rng.uniform() < spec.primary_share ? out.primary[d] : out.secondary[d];
      ++out.topic_tokens[t];
      if (!text.empty()) text += ' ';
      text += out.words[draw_cumulative(cumulative[t], rng)];
    }
    char id[32];
    std::snprintf(id, sizeof id, "d%05zu", d);
    out.documents.push_back({id, std::move(text), "topic" + std::to_string(out.primary[d])});
  }
  return out;
}

std::vector<std::string> SyntheticCorpus::top_words(std::size_t topic, std::size_t n) const {
  std::vector<std::size_t> idx(words.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto& p = topic_word.at(topic);
  const std::size_t keep = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](std::size_t a, std::size_t b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(words[idx[i]]);
  return out;
}

std::vector<std::size_t> SyntheticCorpus::planted_documents() const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < primary.size(); ++d) {
    if (primary[d] == rare_topic) out.push_back(d);
  }
  return out;
}

std::string SyntheticCorpus::planted_query() const {
  const auto top = top_words(rare_topic, 2);
  return top[0] + " " + top[1];
}

std::string SyntheticCorpus::ground_truth_json() const {
  using json = nlohmann::json;
  json docs = json::array();
  for (std::size_t d = 0; d < documents.size(); ++d) {
    docs.push_back({{"id", documents[d].id}, {"primary", primary[d]}, {"secondary", secondary[d]}});
  }
  json topics = json::array();
  for (std::size_t t = 0; t < topic_word.size(); ++t) {
    json block = json::array();
    for (std::size_t w : blocks[t]) block.push_back(words[w]);
    topics.push_back({{"topic", t},
                      {"top_words", top_words(t, 10)},
                      {"block", block},
                      {"tokens", topic_tokens[t]}});
  }
  json planted = json::array();
  for (std::size_t d : planted_documents()) planted.push_back(documents[d].id);
  json j{{"format", kGroundTruthFormat},
         {"seed", spec.seed},
         {"rare_topic", rare_topic},
         {"query", planted_query()},
         {"planted_documents", planted},
         {"topics", topics},
         {"documents", docs}};
  return j.dump(2) + "\n";
}

std::string synthetic_embeddings(const SyntheticCorpus& corpus) {
  const auto& spec = corpus.spec;
  Rng rng(derive_seed(spec.seed, 0xe5be));
  const std::size_t dim = spec.embedding_dim;
  std::vector<std::vector<double>> centroids(corpus.blocks.size(), std::vector<double>(dim));
  for (auto& c : centroids) {
    for (auto& x : c) x = rng.normal();
  }
  std::vector<std::size_t> owner(corpus.words.size(), 0);
  for (std::size_t t = 0; t < corpus.blocks.size(); ++t) {
    for (std::size_t w : corpus.blocks[t]) owner[w] = t;
  }
  std::ostringstream out;
  out << corpus.words.size() << ' ' << dim << '\n';
  out.precision(6);
  out << std::fixed;
  for (std::size_t w = 0; w < corpus.words.size(); ++w) {
    out << corpus.words[w];
    for (std::size_t i = 0; i < dim; ++i) {
      out << ' ' << centroids[owner[w]][i] + spec.embedding_noise * rng.normal();
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace qdtm
