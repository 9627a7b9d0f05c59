#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "qdtm/concepts.hpp"
#include "qdtm/corpus.hpp"
#include "qdtm/embeddings.hpp"
#include "qdtm/error.hpp"
#include "qdtm/io.hpp"
#include "qdtm/metrics.hpp"
#include "qdtm/model.hpp"
#include "qdtm/retrieval.hpp"
#include "qdtm/synth.hpp"

namespace qdtm::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CorpusArgs {
  std::string path;
  PreprocessOptions pre;
  bool keep_numeric = false;
  bool no_lowercase = false;
};

struct SynthArgs {
  SyntheticSpec spec;
  std::string out;
  std::string truth;
  std::string embeddings_out;
};

struct IngestArgs {
  CorpusArgs corpus;
  std::string out;
  std::string vocab_out;
};

struct RetrieveArgs {
  CorpusArgs corpus;
  std::string query;
  std::string mode = "or";
  std::size_t top = kDefaultRetrievalCutoff;
  double mu = kDefaultSmoothing;
  std::string out;
};

struct ExpandArgs {
  RetrieveArgs retrieve;
  std::string method = "kld";
  std::size_t n = 10;
  double lambda = 0.5;
  std::size_t topk = 100;
  bool exclude_query_terms = false;
  std::string embeddings;
};

struct FitArgs {
  ExpandArgs expand;
  std::vector<std::string> queries;
  std::string queries_file;
  FitOptions options;
  bool no_gpu = false;
  bool no_filtering = false;
  std::string checkpoint;
  std::size_t checkpoint_every = 0;
  bool resume = false;
};

struct EvalArgs {
  CorpusArgs corpus;
  std::string result;
  std::string embeddings;
  std::string labels;
  std::size_t k = 0;
  std::string out;
};

// Scalar options record their defaults so the manifest lists every value.
template <typename T>
CLI::Option* option(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option(name, value, help)->capture_default_str();
}

void add_corpus_options(CLI::App* app, CorpusArgs& a, bool required = true) {
  auto* o = app->add_option("--corpus", a.path, "JSON-lines corpus or a saved corpus file");
  if (required) o->required();
  option(app, "--stopwords", a.pre.stopwords, "english, none, or a file with one stopword per line");
  option(app, "--min-df", a.pre.min_df, "minimum document frequency");
  option(app, "--min-length", a.pre.min_token_length, "minimum token length");
  app->add_flag("--keep-numeric", a.keep_numeric, "keep purely numeric tokens");
  app->add_flag("--no-lowercase", a.no_lowercase, "disable case folding");
}

void add_retrieve_options(CLI::App* app, RetrieveArgs& a, bool query_required) {
  add_corpus_options(app, a.corpus);
  if (query_required) app->add_option("--query", a.query, "query phrase")->required();
  option(app, "--mode", a.mode, "and|or")->check(CLI::IsMember({"and", "or"}));
  option(app, "--top", a.top, "retrieval cutoff R");
  option(app, "--mu", a.mu, "Dirichlet smoothing mass");
}

void add_expand_options(CLI::App* app, ExpandArgs& a, bool query_required) {
  add_retrieve_options(app, a.retrieve, query_required);
  option(app, "--method", a.method, "fre|kld|rel")->check(CLI::IsMember({"fre", "kld", "rel"}));
  option(app, "--n", a.n, "number of concept words");
  option(app, "--lambda", a.lambda, "REL mixture weight");
  option(app, "--topk", a.topk, "REL similarity cutoff k");
  app->add_flag("--exclude-query-terms", a.exclude_query_terms, "drop the query's own terms");
  app->add_option("--embeddings", a.embeddings, "word vectors (text format)");
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) return;
  if (!fs::is_regular_file(path)) throw ParameterError(what + " '" + path + "' does not exist");
}

Corpus load_any_corpus(const CorpusArgs& a) {
  const std::string text = read_text(a.path);
  // A saved corpus is a single JSON object carrying the format tag.
  try {
    const json j = json::parse(text);
    if (j.is_object() && j.value("format", "") == kCorpusFormat) {
      std::istringstream in(text);
      return load_corpus(in);
    }
  } catch (const json::parse_error&) {
  }
  PreprocessOptions pre = a.pre;
  pre.drop_numeric = !a.keep_numeric;
  pre.lowercase = !a.no_lowercase;
  std::istringstream in(text);
  return ingest(read_jsonl(in), pre);
}

std::optional<EmbeddingTable> load_optional_embeddings(const std::string& path, const Corpus& corpus) {
  if (path.empty()) return std::nullopt;
  return load_embeddings(fs::path(path), corpus.vocabulary());
}

ExpansionOptions expansion_options(const ExpandArgs& a) {
  ExpansionOptions e;
  e.method = parse_expansion_method(a.method);
  e.count = a.n;
  e.lambda = a.lambda;
  e.similarity_cutoff = a.topk;
  e.exclude_query_terms = a.exclude_query_terms;
  return e;
}

void validate_expand(const ExpandArgs& a) {
  require_file(a.retrieve.corpus.path, "corpus");
  require_file(a.embeddings, "embedding file");
  if (a.retrieve.top < 1) throw ParameterError("--top must be at least 1");
  if (a.retrieve.mu < 0.0) throw ParameterError("--mu must be non-negative");
  if (a.n < 1) throw ParameterError("--n must be at least 1");
  if (!(a.lambda >= 0.0 && a.lambda <= 1.0)) throw ParameterError("--lambda must lie in [0, 1]");
  if (a.topk < 1) throw ParameterError("--topk must be at least 1");
  if (a.method == "rel" && a.embeddings.empty()) {
    throw ParameterError("method rel requires --embeddings");
  }
}

std::vector<std::string> read_query_file(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_text(path));
  for (std::string line; std::getline(in, line);) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(first, last - first + 1));
  }
  return out;
}

json score_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Output files written by the running command; removed if it fails.
class Outputs {
 public:
  void write(const std::string& path, const std::string& content) {
    write_text_atomic(path, content);
    written_.push_back(path);
  }
  void discard() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

 private:
  std::vector<std::string> written_;
};

void emit(Outputs& outputs, const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    outputs.write(path, content);
  }
}

// Every option of the command, defaults included, under a [command]
// section. Empty values are left out: they mean "not given".
std::string manifest_text(const CLI::App& app, const std::string& command) {
  std::string text = "# qdtm " + std::string(kVersion) + " manifest for '" + command + "'\n";
  text += "# replay with: qdtm --config <this file> " + command + "\n";
  text += "[" + command + "]\n";
  std::istringstream body(app.get_subcommand(command)->config_to_str(true, false));
  for (std::string line; std::getline(body, line);) {
    if (line.empty() || line.ends_with("=\"\"") || line.ends_with("=\"{}\"")) continue;
    text += line + "\n";
  }
  return text;
}

void write_manifest(Outputs& outputs, const CLI::App& app, const std::string& command,
                    const std::string& out) {
  if (out.empty()) return;
  outputs.write(out + ".manifest.toml", manifest_text(app, command));
}

void command_synth(const SynthArgs& a, Outputs& outputs) {
  a.spec.validate();
  const auto corpus = generate_corpus(a.spec);
  std::ostringstream docs;
  write_jsonl(docs, corpus.documents);
  outputs.write(a.out, docs.str());
  outputs.write(a.truth.empty() ? a.out + ".truth.json" : a.truth, corpus.ground_truth_json());
  if (!a.embeddings_out.empty()) outputs.write(a.embeddings_out, synthetic_embeddings(corpus));
}

void command_ingest(const IngestArgs& a, Outputs& outputs, std::ostream& out) {
  require_file(a.corpus.path, "corpus");
  const Corpus corpus = load_any_corpus(a.corpus);
  std::ostringstream saved;
  save_corpus(saved, corpus);
  outputs.write(a.out, saved.str());
  if (!a.vocab_out.empty()) {
    std::ostringstream vocab;
    write_vocabulary(vocab, corpus.vocabulary());
    outputs.write(a.vocab_out, vocab.str());
  }
  out << json{{"documents", corpus.size()},
              {"vocabulary", corpus.vocabulary().size()},
              {"tokens", corpus.vocabulary().total_tokens()},
              {"dropped_documents", corpus.dropped_documents()}}
             .dump()
      << "\n";
}

void command_retrieve(const RetrieveArgs& a, Outputs& outputs, std::ostream& out) {
  require_file(a.corpus.path, "corpus");
  if (a.top < 1) throw ParameterError("--top must be at least 1");
  if (a.mu < 0.0) throw ParameterError("--mu must be non-negative");
  const Corpus corpus = load_any_corpus(a.corpus);
  const Query q = make_query(corpus, a.query, parse_query_mode(a.mode));
  const auto set = retrieve(corpus, q, a.top, a.mu);
  json list = json::array();
  for (const auto& d : set.documents) {
    list.push_back({{"doc_id", corpus.document(d.document).id}, {"log_score", score_or_null(d.log_score)}});
  }
  emit(outputs, a.out, list.dump(2) + "\n", out);
}

void command_expand(const ExpandArgs& a, Outputs& outputs, std::ostream& out) {
  validate_expand(a);
  const Corpus corpus = load_any_corpus(a.retrieve.corpus);
  const auto embeddings = load_optional_embeddings(a.embeddings, corpus);
  const Query q = make_query(corpus, a.retrieve.query, parse_query_mode(a.retrieve.mode));
  const auto set = extract_concept_words(corpus, q, a.retrieve.top, a.retrieve.mu,
                                         expansion_options(a), embeddings ? &*embeddings : nullptr);
  json words = json::array();
  for (const auto& w : set.words) {
    words.push_back({{"token", corpus.vocabulary().token(w.word)}, {"score", w.score}});
  }
  json result{{"query", set.query}, {"method", std::string(to_string(set.method))}, {"words", words}};
  emit(outputs, a.retrieve.out, result.dump(2) + "\n", out);
}

void command_fit(FitArgs& a, Outputs& outputs, std::ostream& out) {
  std::vector<std::string> phrases = a.queries;
  require_file(a.queries_file, "query file");
  if (!a.queries_file.empty()) {
    const auto more = read_query_file(a.queries_file);
    phrases.insert(phrases.end(), more.begin(), more.end());
  }
  if (phrases.empty()) throw ParameterError("fit needs --query or --queries");
  validate_expand(a.expand);
  if (a.resume && a.checkpoint.empty()) throw ParameterError("--resume requires --checkpoint");

  FitOptions& o = a.options;
  o.expansion = expansion_options(a.expand);
  o.retrieval_cutoff = a.expand.retrieve.top;
  o.smoothing = a.expand.retrieve.mu;
  o.hyper.use_gpu = !a.no_gpu;
  o.hyper.word_filtering = !a.no_filtering;
  o.validate(phrases.size());

  const Corpus corpus = load_any_corpus(a.expand.retrieve.corpus);
  const auto embeddings = load_optional_embeddings(a.expand.embeddings, corpus);
  const QueryMode mode = parse_query_mode(a.expand.retrieve.mode);
  std::vector<QuerySpec> queries;
  for (const auto& p : phrases) queries.push_back({p, mode});

  std::optional<CheckpointOptions> checkpoint;
  if (!a.checkpoint.empty()) checkpoint = CheckpointOptions{a.checkpoint, a.checkpoint_every, a.resume, {}};
  const auto result = fit(corpus, queries, embeddings ? &*embeddings : nullptr, o, checkpoint,
                          [](const HdpChain& chain, std::size_t it) {
                            if (it % 100 == 0) {
                              spdlog::debug("first phase: iteration {}, {} live topics", it,
                                            chain.live_topic_count());
                            }
                          });
  emit(outputs, a.expand.retrieve.out, result_to_json(result), out);
}

json labels_for(const std::string& path) {
  if (path.empty()) return json::object();
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError("labels file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError("labels file must map query phrases to a label or document ids");
  return j;
}

std::unordered_set<std::size_t> relevant_documents(const json& spec, const Corpus& corpus,
                                                   const std::string& query) {
  std::unordered_set<std::size_t> out;
  if (spec.is_string()) {
    const auto label = spec.get<std::string>();
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      if (corpus.document(d).label && *corpus.document(d).label == label) out.insert(d);
    }
  } else if (spec.is_array()) {
    for (const auto& id : spec) {
      const auto d = corpus.find_document(id.get<std::string>());
      if (!d) throw LookupError("labels for '" + query + "' name unknown document '" + id.get<std::string>() + "'");
      out.insert(*d);
    }
  } else {
    throw FormatError("labels for '" + query + "' must be a label string or a list of document ids");
  }
  return out;
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

void command_eval(const EvalArgs& a, Outputs& outputs, std::ostream& out) {
  require_file(a.result, "result file");
  require_file(a.corpus.path, "corpus");
  require_file(a.embeddings, "embedding file");
  require_file(a.labels, "labels file");
  const auto result = read_result(a.result);
  const Corpus corpus = load_any_corpus(a.corpus);
  if (result.documents.size() != corpus.size()) {
    throw ParameterError("result covers " + std::to_string(result.documents.size()) +
                         " documents but the corpus has " + std::to_string(corpus.size()));
  }
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    if (result.documents[d] != corpus.document(d).id) {
      throw ParameterError("result and corpus disagree on document " + std::to_string(d));
    }
  }
  const auto embeddings = load_optional_embeddings(a.embeddings, corpus);
  const json labels = labels_for(a.labels);

  json queries = json::array();
  for (const auto& q : result.queries) {
    const auto report = subtopic_report(q, corpus, embeddings ? &*embeddings : nullptr);
    json subs = json::array();
    for (const auto& s : report.subtopics) {
      subs.push_back({{"prevalence", s.prevalence},
                      {"cohesion", optional_json(s.cohesion)},
                      {"npmi", optional_json(s.npmi)}});
    }
    json entry{{"query", q.query},
               {"diversity", report.diversity},
               {"cohesion", optional_json(report.cohesion)},
               {"overall", optional_json(report.overall)},
               {"npmi", optional_json(report.parent_npmi)},
               {"subtopics", subs}};
    if (labels.contains(q.query)) {
      const auto relevant = relevant_documents(labels.at(q.query), corpus, q.query);
      const std::size_t k = a.k > 0 ? a.k : relevant.size();
      if (k == 0) throw ParameterError("no relevant documents for query '" + q.query + "'");
      const auto ranking = rank_by_weight(q.document_weights);
      entry["k"] = k;
      entry["precision_at_k"] = precision_at_k(ranking, relevant, k);
    }
    queries.push_back(std::move(entry));
  }
  json report{{"result", a.result}, {"queries", queries}};
  emit(outputs, a.out, report.dump(2) + "\n", out);
}

// CLI11 reads --config only before the subcommand; accept it anywhere.
std::vector<std::string> hoist_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      std::vector<std::string> front{args[i], args[i + 1]};
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      args.insert(args.begin(), front.begin(), front.end());
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      std::string opt = args[i];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      args.insert(args.begin(), opt);
      break;
    }
  }
  return args;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query-driven topic modeling", "qdtm"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML config; keys are flag names under [command] sections");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "errors only");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted synthetic corpus");
  option(synth_cmd, "--seed", synth.spec.seed, "random seed");
  option(synth_cmd, "--topics", synth.spec.topics, "topic count");
  option(synth_cmd, "--vocab", synth.spec.vocabulary, "vocabulary size");
  option(synth_cmd, "--docs", synth.spec.documents, "document count");
  option(synth_cmd, "--doc-length", synth.spec.doc_length, "mean document length");
  option(synth_cmd, "--rare-prevalence", synth.spec.rare_prevalence, "token share of the rare topic");
  option(synth_cmd, "--primary-share", synth.spec.primary_share, "share of tokens from a document's main topic");
  option(synth_cmd, "--noise", synth.spec.noise, "uniform mass in every topic");
  option(synth_cmd, "--zipf", synth.spec.zipf_exponent, "Zipf exponent inside topic blocks");
  option(synth_cmd, "--embedding-dim", synth.spec.embedding_dim, "synthetic vector dimension");
  option(synth_cmd, "--embedding-noise", synth.spec.embedding_noise, "vector spread around topic centroids");
  synth_cmd->add_option("--out", synth.out, "corpus output (JSON lines)")->required();
  synth_cmd->add_option("--truth", synth.truth, "ground truth output (default <out>.truth.json)");
  synth_cmd->add_option("--embeddings-out", synth.embeddings_out, "synthetic word vectors output");

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "preprocess a JSON-lines corpus");
  add_corpus_options(ingest_cmd, ingest_args.corpus);
  ingest_cmd->add_option("--out", ingest_args.out, "saved corpus output")->required();
  ingest_cmd->add_option("--vocab-out", ingest_args.vocab_out, "vocabulary listing output");

  RetrieveArgs retrieve_args;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "rank documents by query likelihood");
  add_retrieve_options(retrieve_cmd, retrieve_args, true);
  retrieve_cmd->add_option("--out", retrieve_args.out, "output file (default stdout)");

  ExpandArgs expand_args;
  auto* expand_cmd = app.add_subcommand("expand", "extract concept words for a query");
  add_expand_options(expand_cmd, expand_args, true);
  expand_cmd->add_option("--out", expand_args.retrieve.out, "output file (default stdout)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "fit parent topics and subtopics");
  add_expand_options(fit_cmd, fit_args.expand, false);
  fit_cmd->add_option("--query", fit_args.queries, "query phrase (repeatable)");
  fit_cmd->add_option("--queries", fit_args.queries_file, "file with one query phrase per line");
  auto& fo = fit_args.options;
  option(fit_cmd, "--iters1", fo.iterations_phase1, "first-phase sweeps");
  option(fit_cmd, "--iters2", fo.iterations_phase2, "second-phase sweeps");
  option(fit_cmd, "--seed", fo.seed, "random seed");
  option(fit_cmd, "--alpha", fo.hyper.alpha, "table concentration");
  option(fit_cmd, "--beta", fo.hyper.beta, "topic-word smoothing");
  option(fit_cmd, "--gamma", fo.hyper.gamma, "topic concentration");
  option(fit_cmd, "--k", fo.hyper.initial_topics, "initial first-phase topics (parents included)");
  option(fit_cmd, "--k2", fo.hyper.initial_subtopics, "initial second-phase topics");
  option(fit_cmd, "--u", fo.hyper.u, "promotion weight");
  option(fit_cmd, "--tau", fo.hyper.tau, "relatedness threshold");
  option(fit_cmd, "--m", fo.hyper.representative_words, "representative words per topic");
  option(fit_cmd, "--floor", fo.hyper.prevalence_floor, "subtopic prevalence floor");
  fit_cmd->add_flag("--no-gpu", fit_args.no_gpu, "disable promotion");
  fit_cmd->add_flag("--no-filtering", fit_args.no_filtering, "promote on every draw");
  option(fit_cmd, "--threads", fo.threads, "concurrent second-phase chains");
  option(fit_cmd, "--top-words", fo.top_words, "top words reported per topic");
  fit_cmd->add_flag("--full-posterior", fo.full_posterior, "include full topic-word and document-topic rows");
  fit_cmd->add_option("--checkpoint", fit_args.checkpoint, "first-phase checkpoint file");
  option(fit_cmd, "--checkpoint-every", fit_args.checkpoint_every, "sweeps between checkpoints (0: end only)");
  fit_cmd->add_flag("--resume", fit_args.resume, "continue from --checkpoint if it exists");
  fit_cmd->add_option("--out", fit_args.expand.retrieve.out, "result output (default stdout)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score a fit result");
  eval_cmd->add_option("--result", eval_args.result, "result file from fit")->required();
  add_corpus_options(eval_cmd, eval_args.corpus);
  eval_cmd->add_option("--embeddings", eval_args.embeddings, "word vectors (text format)");
  eval_cmd->add_option("--labels", eval_args.labels, "JSON: query phrase -> label or list of document ids");
  option(eval_cmd, "--k", eval_args.k, "precision cutoff (0: number of relevant documents)");
  eval_cmd->add_option("--out", eval_args.out, "report output (default stdout)");

  const auto args = hoist_config(raw_args);
  std::vector<std::string> storage{"qdtm"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitValidation;
  }

  auto logger = std::make_shared<spdlog::logger>(
      "qdtm", std::make_shared<spdlog::sinks::ostream_sink_mt>(err));
  logger->set_pattern("[%l] %v");
  logger->set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::warn);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);

  Outputs outputs;
  int code = kExitOk;
  try {
    if (synth_cmd->parsed()) {
      command_synth(synth, outputs);
      write_manifest(outputs, app, "synth", synth.out);
    } else if (ingest_cmd->parsed()) {
      command_ingest(ingest_args, outputs, out);
      write_manifest(outputs, app, "ingest", ingest_args.out);
    } else if (retrieve_cmd->parsed()) {
      command_retrieve(retrieve_args, outputs, out);
      write_manifest(outputs, app, "retrieve", retrieve_args.out);
    } else if (expand_cmd->parsed()) {
      command_expand(expand_args, outputs, out);
      write_manifest(outputs, app, "expand", expand_args.retrieve.out);
    } else if (fit_cmd->parsed()) {
      command_fit(fit_args, outputs, out);
      write_manifest(outputs, app, "fit", fit_args.expand.retrieve.out);
    } else if (eval_cmd->parsed()) {
      command_eval(eval_args, outputs, out);
      write_manifest(outputs, app, "eval", eval_args.out);
    }
  } catch (const Error& e) {
    outputs.discard();
    const std::string kind = e.kind();
    report_error(err, kind, e.what());
    code = kind == "parameter" || kind == "format" || kind == "lookup" ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    outputs.discard();
    report_error(err, "runtime", e.what());
    code = kExitRuntime;
  }
  spdlog::set_default_logger(previous);
  return code;
}

}  // namespace qdtm::cli
