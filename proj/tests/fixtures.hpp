#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "qdtm/corpus.hpp"

namespace qdtm::test {

// Whitespace-tokenized corpus with no stopwords and no length floor, so
// single letters are words.
inline PreprocessOptions plain_options() {
  PreprocessOptions o;
  o.stopwords = "none";
  o.min_token_length = 1;
  return o;
}

inline Corpus plain_corpus(const std::vector<std::string>& texts) {
  std::vector<RawDocument> raw;
  for (std::size_t i = 0; i < texts.size(); ++i) raw.push_back({"d" + std::to_string(i), texts[i], {}});
  return ingest(raw, plain_options());
}

inline WordId id(const Corpus& c, const std::string& token) { return c.vocabulary().id(token); }

// Routes the default logger into a string for the lifetime of the object.
class LogCapture {
 public:
  LogCapture() : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(stream_);
    auto logger = std::make_shared<spdlog::logger>("capture", sink);
    logger->set_level(spdlog::level::warn);
    spdlog::set_default_logger(logger);
  }
  ~LogCapture() { spdlog::set_default_logger(previous_); }
  LogCapture(const LogCapture&) = delete;
  LogCapture& operator=(const LogCapture&) = delete;

  std::string text() const { return stream_.str(); }
  bool contains(const std::string& s) const { return text().find(s) != std::string::npos; }

 private:
  std::shared_ptr<spdlog::logger> previous_;
  std::ostringstream stream_;
};

}  // namespace qdtm::test
