#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qdtm/corpus.hpp"

namespace qdtm {

inline constexpr const char* kGroundTruthFormat = "qdtm-ground-truth/1";

// Block-structured synthetic corpus with one rare topic.
struct SyntheticSpec {
  std::size_t topics = 6;
  std::size_t vocabulary = 1000;
  std::size_t documents = 500;
  // Mean document length; lengths are uniform on [L/2, 3L/2].
  std::size_t doc_length = 50;
  // Token share of the rare topic (topic 0).
  double rare_prevalence = 0.02;
  // Share of a document's tokens drawn from its primary topic.
  double primary_share = 0.8;
  // Uniform mass mixed into every topic's word distribution.
  double noise = 0.05;
  double zipf_exponent = 1.0;
  std::size_t embedding_dim = 32;
  // Spread of word vectors around their topic centroid.
  double embedding_noise = 0.5;
  std::uint64_t seed = 7;

  // Throws ParameterError.
  void validate() const;
};

struct SyntheticCorpus {
  SyntheticSpec spec;
  std::vector<RawDocument> documents;
  // Word names by generator index.
  std::vector<std::string> words;
  // topics x vocabulary word probabilities.
  std::vector<std::vector<double>> topic_word;
  // Word indices owned by each topic's block.
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::size_t> primary;
  std::vector<std::size_t> secondary;
  std::size_t rare_topic = 0;
  // Tokens drawn from each topic.
  std::vector<std::size_t> topic_tokens;

  // Most probable words of topic t, ties by word index.
  std::vector<std::string> top_words(std::size_t topic, std::size_t n) const;
  // Indices of documents whose primary topic is the rare one.
  std::vector<std::size_t> planted_documents() const;
  // The rare topic's two most probable words.
  std::string planted_query() const;
  std::string ground_truth_json() const;
};

SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

// Text vectors: each word sits near a random centroid of its block's topic.
// Header line included.
std::string synthetic_embeddings(const SyntheticCorpus& corpus);

}  // namespace qdtm
