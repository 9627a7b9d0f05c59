#include "qdtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "qdtm/error.hpp"

namespace qdtm {

double topic_diversity(const std::vector<std::vector<std::string>>& top_words) {
  std::unordered_set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& list : top_words) {
    total += list.size();
    distinct.insert(list.begin(), list.end());
  }
  if (total == 0) throw ParameterError("topic diversity is undefined without top words");
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

std::optional<std::vector<double>> topic_embedding(const EmbeddingTable& embeddings,
                                                   const Vocabulary& vocabulary,
                                                   const std::vector<WeightedWord>& top_words,
                                                   std::size_t top_n) {
  std::vector<std::pair<WordId, double>> usable;
  double total = 0.0;
  for (std::size_t i = 0; i < std::min(top_n, top_words.size()); ++i) {
    const auto id = vocabulary.find(top_words[i].token);
    if (!id || !embeddings.has(*id)) continue;
    usable.emplace_back(*id, top_words[i].weight);
    total += top_words[i].weight;
  }
  if (usable.empty() || !(total > 0.0)) return std::nullopt;
  std::vector<double> out(embeddings.dimension(), 0.0);
  for (const auto& [id, weight] : usable) {
    auto v = embeddings.vector(id);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += weight / total * v[d];
  }
  return out;
}

double topic_cohesion(const std::vector<double>& parent, const std::vector<double>& subtopic) {
  return cosine(parent, subtopic);
}

std::optional<double> npmi_coherence(const Corpus& corpus, const std::vector<WordId>& words,
                                     std::size_t top_n) {
  std::vector<WordId> top(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(std::min(top_n, words.size())));
  const double D = static_cast<double>(corpus.size());
  std::vector<std::unordered_set<std::size_t>> docs(top.size());
  for (std::size_t i = 0; i < top.size(); ++i) {
    for (const auto& p : corpus.postings(top[i])) docs[i].insert(p.document);
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < top.size(); ++i) {
    for (std::size_t j = i + 1; j < top.size(); ++j) {
      if (docs[i].empty() || docs[j].empty()) continue;
      std::size_t joint = 0;
      for (std::size_t d : docs[i]) joint += docs[j].count(d);
      const double pi = (static_cast<double>(docs[i].size()) + 1.0) / (D + 2.0);
      const double pj = (static_cast<double>(docs[j].size()) + 1.0) / (D + 2.0);
      const double pij = (static_cast<double>(joint) + 1.0) / (D + 2.0);
      const double denom = -std::log(pij);
      if (denom <= 0.0) continue;
      sum += std::log(pij / (pi * pj)) / denom;
      ++pairs;
    }
  }
  if (pairs == 0) return std::nullopt;
  return sum / static_cast<double>(pairs);
}

std::optional<double> npmi_coherence(const Corpus& corpus, const std::vector<WeightedWord>& words,
                                     std::size_t top_n) {
  std::vector<WordId> ids;
  for (const auto& w : words) {
    if (auto id = corpus.vocabulary().find(w.token)) ids.push_back(*id);
  }
  return npmi_coherence(corpus, ids, top_n);
}

SubtopicReport subtopic_report(const QueryResult& result, const Corpus& corpus,
                               const EmbeddingTable* embeddings) {
  SubtopicReport report;
  report.query = result.query;
  std::vector<std::vector<std::string>> lists;
  for (const auto& s : result.subtopics) {
    std::vector<std::string> tokens;
    for (const auto& w : s.top_words) tokens.push_back(w.token);
    lists.push_back(std::move(tokens));
  }
  report.diversity = topic_diversity(lists);
  report.parent_npmi = npmi_coherence(corpus, result.parent.top_words);

  std::optional<std::vector<double>> parent;
  if (embeddings != nullptr) {
    parent = topic_embedding(*embeddings, corpus.vocabulary(), result.parent.top_words);
    if (!parent) spdlog::warn("query '{}': parent topic has no embedded top word", result.query);
  }
  double cohesion_sum = 0.0;
  std::size_t cohesion_n = 0;
  for (std::size_t i = 0; i < result.subtopics.size(); ++i) {
    const auto& s = result.subtopics[i];
    SubtopicReport::Entry e;
    e.prevalence = s.prevalence;
    e.npmi = npmi_coherence(corpus, s.top_words);
    if (parent) {
      auto sub = topic_embedding(*embeddings, corpus.vocabulary(), s.top_words);
      if (sub) {
        e.cohesion = topic_cohesion(*parent, *sub);
        cohesion_sum += *e.cohesion;
        ++cohesion_n;
      } else {
        spdlog::warn("query '{}': subtopic {} has no embedded top word; cohesion skipped",
                     result.query, i);
      }
    }
    report.subtopics.push_back(e);
  }
  if (cohesion_n > 0) {
    report.cohesion = cohesion_sum / static_cast<double>(cohesion_n);
    report.overall = overall_quality(report.diversity, *report.cohesion);
  }
  return report;
}

std::vector<std::size_t> rank_by_weight(const std::vector<double>& weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return order;
}

}  // namespace qdtm
