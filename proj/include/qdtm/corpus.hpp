#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qdtm {

using WordId = std::uint32_t;

struct RawDocument {
  std::string id;
  std::string text;
  std::optional<std::string> label;
};

// Everything that determines the vocabulary from raw text. Written into
// every run manifest.
struct PreprocessOptions {
  bool lowercase = true;
  // "english" (built-in list), "none", or a path to a file with one
  // stopword per line.
  std::string stopwords = "english";
  std::size_t min_df = 1;
  std::size_t min_token_length = 2;
  bool drop_numeric = true;
};

// Splits on non-alphanumeric runs, then applies case folding, the length
// floor, and the numeric filter. Stopwords are not removed here.
std::vector<std::string> tokenize(std::string_view text,
                                  const PreprocessOptions& options);

// Resolves options.stopwords to the actual word set.
std::unordered_set<std::string> load_stopwords(const PreprocessOptions& options);

class Vocabulary {
 public:
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  const std::string& token(WordId id) const;
  std::optional<WordId> find(std::string_view token) const;
  // Like find() but throws LookupError.
  WordId id(std::string_view token) const;

  bool contains(WordId id) const { return id < tokens_.size(); }
  void check(WordId id) const;

  // Number of documents containing the token.
  std::size_t document_frequency(WordId id) const;
  // Total occurrences of the token.
  std::size_t corpus_frequency(WordId id) const;
  std::size_t total_tokens() const { return total_tokens_; }

  const std::vector<std::string>& tokens() const { return tokens_; }

  // Appends a new token; used by ingestion and deserialization.
  WordId add(std::string token);
  void set_counts(std::vector<std::size_t> document_frequency,
                  std::vector<std::size_t> corpus_frequency);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, WordId> index_;
  std::vector<std::size_t> df_;
  std::vector<std::size_t> cf_;
  std::size_t total_tokens_ = 0;
};

struct Document {
  std::string id;
  std::vector<WordId> tokens;
  std::optional<std::string> label;

  std::size_t size() const { return tokens.size(); }
};

struct Posting {
  std::uint32_t document;
  std::uint32_t count;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, Vocabulary vocabulary,
         PreprocessOptions manifest, std::size_t dropped_documents = 0);

  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(std::size_t index) const;
  std::size_t size() const { return documents_.size(); }

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const PreprocessOptions& manifest() const { return manifest_; }
  std::size_t dropped_documents() const { return dropped_; }

  // Documents containing the word, ascending by document index.
  const std::vector<Posting>& postings(WordId word) const;

  std::optional<std::size_t> find_document(std::string_view id) const;

 private:
  std::vector<Document> documents_;
  Vocabulary vocabulary_;
  PreprocessOptions manifest_;
  std::size_t dropped_ = 0;
  std::vector<std::vector<Posting>> postings_;
};

// Builds the vocabulary and id-mapped documents. Vocabulary ids follow
// first occurrence among tokens that survive the stopword and min-df
// filters. Documents left empty are dropped and counted.
Corpus ingest(const std::vector<RawDocument>& raw,
              const PreprocessOptions& options);

// One JSON object per line with string fields "id" and "text" and an
// optional string "label". Blank lines are skipped.
std::vector<RawDocument> read_jsonl(std::istream& in);
std::vector<RawDocument> read_jsonl(const std::filesystem::path& path);
void write_jsonl(std::ostream& out, const std::vector<RawDocument>& docs);

std::size_t term_frequency(const Vocabulary& vocabulary, WordId word,
                           const Document& document);

// P_C(w): corpus frequency over total corpus tokens.
double background_prob(const Vocabulary& vocabulary, WordId word);

// Versioned JSON corpus cache.
inline constexpr std::string_view kCorpusFormat = "qdtm-corpus/1";
void save_corpus(std::ostream& out, const Corpus& corpus);
Corpus load_corpus(std::istream& in);

// One "token<TAB>df<TAB>cf" line per id, in id order.
void write_vocabulary(std::ostream& out, const Vocabulary& vocabulary);

}  // namespace qdtm
