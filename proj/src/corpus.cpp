#include "qdtm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "qdtm/error.hpp"

namespace qdtm {

namespace {

using nlohmann::json;

// Common English function words.
constexpr std::string_view kEnglishStopwords[] = {
    "a",       "about",   "above",  "after",   "again",  "against", "all",
    "am",      "an",      "and",    "any",     "are",    "as",      "at",
    "be",      "because", "been",   "before",  "being",  "below",   "between",
    "both",    "but",     "by",     "can",     "could",  "did",     "do",
    "does",    "doing",   "down",   "during",  "each",   "few",     "for",
    "from",    "further", "had",    "has",     "have",   "having",  "he",
    "her",     "here",    "hers",   "herself", "him",    "himself", "his",
    "how",     "if",      "in",     "into",    "is",     "it",      "its",
    "itself",  "just",    "me",     "more",    "most",   "my",      "myself",
    "no",      "nor",     "not",    "now",     "of",     "off",     "on",
    "once",    "only",    "or",     "other",   "our",    "ours",    "ourselves",
    "out",     "over",    "own",    "same",    "she",    "should",  "so",
    "some",    "such",    "than",   "that",    "the",    "their",   "theirs",
    "them",    "themselves",        "then",    "there",  "these",   "they",
    "this",    "those",   "through", "to",     "too",    "under",   "until",
    "up",      "very",    "was",    "we",      "were",   "what",    "when",
    "where",   "which",   "while",  "who",     "whom",   "why",     "will",
    "with",    "would",   "you",    "your",    "yours",  "yourself",
    "yourselves"};

bool all_digits(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

json manifest_to_json(const PreprocessOptions& o) {
  return json{{"lowercase", o.lowercase},
              {"stopwords", o.stopwords},
              {"min_df", o.min_df},
              {"min_token_length", o.min_token_length},
              {"drop_numeric", o.drop_numeric}};
}

PreprocessOptions manifest_from_json(const json& j) {
  PreprocessOptions o;
  o.lowercase = j.at("lowercase").get<bool>();
  o.stopwords = j.at("stopwords").get<std::string>();
  o.min_df = j.at("min_df").get<std::size_t>();
  o.min_token_length = j.at("min_token_length").get<std::size_t>();
  o.drop_numeric = j.at("drop_numeric").get<bool>();
  return o;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text,
                                  const PreprocessOptions& options) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (current.size() >= options.min_token_length &&
        !(options.drop_numeric && all_digits(current))) {
      out.push_back(current);
    }
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(options.lowercase ? static_cast<char>(std::tolower(c))
                                          : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::unordered_set<std::string> load_stopwords(const PreprocessOptions& options) {
  std::unordered_set<std::string> words;
  if (options.stopwords == "none" || options.stopwords.empty()) return words;
  if (options.stopwords == "english") {
    for (auto w : kEnglishStopwords) words.emplace(w);
    return words;
  }
  std::ifstream in(options.stopwords);
  if (!in) throw ParameterError("cannot open stopword file '" + options.stopwords + "'");
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : tokenize(line, PreprocessOptions{options.lowercase, "none", 1, 1, false})) {
      words.insert(std::move(tok));
    }
  }
  return words;
}

const std::string& Vocabulary::token(WordId id) const {
  check(id);
  return tokens_[id];
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::id(std::string_view token) const {
  auto found = find(token);
  if (!found) throw LookupError("token '" + std::string(token) + "' not in vocabulary");
  return *found;
}

void Vocabulary::check(WordId id) const {
  if (id >= tokens_.size()) {
    throw LookupError("token id " + std::to_string(id) + " out of range (vocabulary size " +
                      std::to_string(tokens_.size()) + ")");
  }
}

std::size_t Vocabulary::document_frequency(WordId id) const {
  check(id);
  return df_[id];
}

std::size_t Vocabulary::corpus_frequency(WordId id) const {
  check(id);
  return cf_[id];
}

WordId Vocabulary::add(std::string token) {
  auto [it, inserted] = index_.emplace(token, static_cast<WordId>(tokens_.size()));
  if (!inserted) return it->second;
  tokens_.push_back(std::move(token));
  df_.push_back(0);
  cf_.push_back(0);
  return it->second;
}

void Vocabulary::set_counts(std::vector<std::size_t> document_frequency,
                            std::vector<std::size_t> corpus_frequency) {
  if (document_frequency.size() != tokens_.size() ||
      corpus_frequency.size() != tokens_.size()) {
    throw ConsistencyError("vocabulary count vectors do not match vocabulary size");
  }
  df_ = std::move(document_frequency);
  cf_ = std::move(corpus_frequency);
  total_tokens_ = 0;
  for (auto c : cf_) total_tokens_ += c;
}

Corpus::Corpus(std::vector<Document> documents, Vocabulary vocabulary,
               PreprocessOptions manifest, std::size_t dropped_documents)
    : documents_(std::move(documents)),
      vocabulary_(std::move(vocabulary)),
      manifest_(std::move(manifest)),
      dropped_(dropped_documents),
      postings_(vocabulary_.size()) {
  std::vector<std::uint32_t> counts(vocabulary_.size(), 0);
  std::vector<WordId> touched;
  for (std::size_t d = 0; d < documents_.size(); ++d) {
    for (WordId w : documents_[d].tokens) {
      vocabulary_.check(w);
      if (counts[w]++ == 0) touched.push_back(w);
    }
    for (WordId w : touched) {
      postings_[w].push_back({static_cast<std::uint32_t>(d), counts[w]});
      counts[w] = 0;
    }
    touched.clear();
  }
}

const Document& Corpus::document(std::size_t index) const {
  if (index >= documents_.size()) {
    throw LookupError("document index " + std::to_string(index) + " out of range");
  }
  return documents_[index];
}

const std::vector<Posting>& Corpus::postings(WordId word) const {
  vocabulary_.check(word);
  return postings_[word];
}

std::optional<std::size_t> Corpus::find_document(std::string_view id) const {
  for (std::size_t d = 0; d < documents_.size(); ++d) {
    if (documents_[d].id == id) return d;
  }
  return std::nullopt;
}

Corpus ingest(const std::vector<RawDocument>& raw, const PreprocessOptions& options) {
  if (raw.empty()) throw ParameterError("no input documents");
  if (options.min_df < 1) throw ParameterError("min_df must be at least 1");

  const auto stopwords = load_stopwords(options);

  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(raw.size());
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : raw) {
    auto toks = tokenize(doc.text, options);
    std::erase_if(toks, [&](const std::string& t) { return stopwords.contains(t); });
    std::unordered_set<std::string_view> seen;
    for (const auto& t : toks) {
      if (seen.insert(t).second) ++df[t];
    }
    tokenized.push_back(std::move(toks));
  }

  Vocabulary vocab;
  std::vector<Document> docs;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Document doc{raw[i].id, {}, raw[i].label};
    for (auto& t : tokenized[i]) {
      if (df[t] < options.min_df) continue;
      doc.tokens.push_back(vocab.add(t));
    }
    if (doc.tokens.empty()) {
      ++dropped;
      continue;
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw EmptyResultError("empty corpus: every document was dropped by preprocessing");
  if (dropped > 0) spdlog::warn("dropped {} document(s) left empty by preprocessing", dropped);

  std::vector<std::size_t> doc_freq(vocab.size(), 0), corpus_freq(vocab.size(), 0);
  std::vector<char> seen(vocab.size(), 0);
  for (const auto& doc : docs) {
    for (WordId w : doc.tokens) {
      ++corpus_freq[w];
      if (!seen[w]) {
        seen[w] = 1;
        ++doc_freq[w];
      }
    }
    for (WordId w : doc.tokens) seen[w] = 0;
  }
  vocab.set_counts(std::move(doc_freq), std::move(corpus_freq));
  return Corpus(std::move(docs), std::move(vocab), options, dropped);
}

std::vector<RawDocument> read_jsonl(std::istream& in) {
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "record on line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(where + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw FormatError(where + ": expected a JSON object");
    auto field = [&](const char* name) -> std::string {
      auto it = j.find(name);
      if (it == j.end() || !it->is_string()) {
        throw FormatError(where + ": missing string field '" + name + "'");
      }
      return it->get<std::string>();
    };
    RawDocument doc{field("id"), field("text"), std::nullopt};
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw FormatError(where + ": field 'label' must be a string");
      doc.label = it->get<std::string>();
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open corpus file '" + path.string() + "'");
  return read_jsonl(in);
}

void write_jsonl(std::ostream& out, const std::vector<RawDocument>& docs) {
  for (const auto& d : docs) {
    json j{{"id", d.id}, {"text", d.text}};
    if (d.label) j["label"] = *d.label;
    out << j.dump() << '\n';
  }
}

std::size_t term_frequency(const Vocabulary& vocabulary, WordId word,
                           const Document& document) {
  vocabulary.check(word);
  return static_cast<std::size_t>(
      std::count(document.tokens.begin(), document.tokens.end(), word));
}

double background_prob(const Vocabulary& vocabulary, WordId word) {
  return static_cast<double>(vocabulary.corpus_frequency(word)) /
         static_cast<double>(vocabulary.total_tokens());
}

void save_corpus(std::ostream& out, const Corpus& corpus) {
  json docs = json::array();
  for (const auto& d : corpus.documents()) {
    json jd{{"id", d.id}, {"tokens", d.tokens}};
    if (d.label) jd["label"] = *d.label;
    docs.push_back(std::move(jd));
  }
  json j{{"format", kCorpusFormat},
         {"manifest", manifest_to_json(corpus.manifest())},
         {"dropped_documents", corpus.dropped_documents()},
         {"vocabulary", corpus.vocabulary().tokens()},
         {"documents", std::move(docs)}};
  out << j.dump() << '\n';
}

Corpus load_corpus(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("corpus cache: invalid JSON (") + e.what() + ")");
  }
  if (j.value("format", "") != kCorpusFormat) {
    throw FormatError("corpus cache: unsupported format tag, expected " +
                      std::string(kCorpusFormat));
  }
  try {
    Vocabulary vocab;
    for (const auto& t : j.at("vocabulary")) vocab.add(t.get<std::string>());
    std::vector<Document> docs;
    std::vector<std::size_t> df(vocab.size(), 0), cf(vocab.size(), 0);
    std::vector<char> seen(vocab.size(), 0);
    for (const auto& jd : j.at("documents")) {
      Document d{jd.at("id").get<std::string>(), jd.at("tokens").get<std::vector<WordId>>(),
                 std::nullopt};
      if (jd.contains("label")) d.label = jd.at("label").get<std::string>();
      for (WordId w : d.tokens) {
        vocab.check(w);
        ++cf[w];
        if (!seen[w]) {
          seen[w] = 1;
          ++df[w];
        }
      }
      for (WordId w : d.tokens) seen[w] = 0;
      docs.push_back(std::move(d));
    }
    vocab.set_counts(std::move(df), std::move(cf));
    return Corpus(std::move(docs), std::move(vocab), manifest_from_json(j.at("manifest")),
                  j.at("dropped_documents").get<std::size_t>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("corpus cache: ") + e.what());
  }
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocabulary) {
  for (WordId w = 0; w < vocabulary.size(); ++w) {
    out << vocabulary.token(w) << '\t' << vocabulary.document_frequency(w) << '\t'
        << vocabulary.corpus_frequency(w) << '\n';
  }
}

}  // namespace qdtm
