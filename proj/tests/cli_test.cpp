#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "qdtm/io.hpp"

namespace fs = std::filesystem;
using qdtm::read_text;
namespace cli = qdtm::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "qdtm_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> small_synth(const fs::path& dir) {
  return {"synth",          "--out",   (dir / "c.jsonl").string(), "--docs", "150", "--vocab", "200",
          "--topics",       "4",       "--doc-length",             "30",     "--rare-prevalence",
          "0.05",           "--embeddings-out",                    (dir / "v.txt").string()};
}

std::string error_kind(const std::string& err) {
  // The error is the last line written.
  const auto end = err.find_last_not_of('\n');
  const auto start = err.rfind('\n', end);
  const auto line = err.substr(start == std::string::npos ? 0 : start + 1);
  return nlohmann::json::parse(line).at("error").get<std::string>();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with the validation code") {
    CHECK(run({}).code == cli::kExitValidation);
    CHECK(run({"frobnicate"}).code == cli::kExitValidation);
    const auto r = run({"fit", "--iters1", "many"});
    CHECK(r.code == cli::kExitValidation);
    CHECK(error_kind(r.err) == "usage");
    CHECK(run({"--help"}).code == cli::kExitOk);
  }

  TEST_CASE("synth is deterministic") {
    const auto a = workdir("synth_a"), b = workdir("synth_b");
    REQUIRE(run(small_synth(a)).code == 0);
    REQUIRE(run(small_synth(b)).code == 0);
    for (const char* f : {"c.jsonl", "c.jsonl.truth.json", "v.txt"}) {
      CHECK(read_text(a / f) == read_text(b / f));
    }
    CHECK(fs::exists(a / "c.jsonl.manifest.toml"));
  }

  TEST_CASE("bad inputs are reported as JSON") {
    const auto dir = workdir("errors");
    REQUIRE(run(small_synth(dir)).code == 0);
    const auto corpus = (dir / "c.jsonl").string();

    auto r = run({"fit", "--corpus", (dir / "missing.jsonl").string(), "--query", "w001"});
    CHECK(r.code == cli::kExitValidation);
    CHECK(error_kind(r.err) == "parameter");

    r = run({"fit", "--corpus", corpus, "--query", "w001", "--method", "rel"});
    CHECK(r.code == cli::kExitValidation);

    r = run({"retrieve", "--corpus", corpus, "--query", "nosuchword"});
    CHECK(r.code == cli::kExitValidation);

    r = run({"fit", "--corpus", corpus, "--query", "w001", "--alpha", "-1"});
    CHECK(r.code == cli::kExitValidation);

    std::ofstream(dir / "broken.jsonl") << "{\"id\": \"a\", \"text\": \"x y\"}\n{oops\n";
    r = run({"ingest", "--corpus", (dir / "broken.jsonl").string(), "--out", (dir / "o.json").string()});
    CHECK(r.code == cli::kExitValidation);
    CHECK(error_kind(r.err) == "format");
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(!fs::exists(dir / "o.json"));
  }

  TEST_CASE("a failing command leaves no partial output") {
    const auto dir = workdir("partial");
    auto args = small_synth(dir);
    args.back() = (dir / "no" / "such" / "dir" / "v.txt").string();
    const auto r = run(args);
    CHECK(r.code != 0);
    CHECK(!fs::exists(dir / "c.jsonl"));
    CHECK(!fs::exists(dir / "c.jsonl.truth.json"));
    CHECK(!fs::exists(dir / "c.jsonl.tmp"));
  }

  TEST_CASE("synth, fit and eval end to end") {
    const auto dir = workdir("pipeline");
    REQUIRE(run(small_synth(dir)).code == 0);
    const auto truth = nlohmann::json::parse(read_text(dir / "c.jsonl.truth.json"));
    const std::string query = truth.at("query");
    const auto corpus = (dir / "c.jsonl").string();
    const auto result = (dir / "r.json").string();

    auto r = run({"ingest", "--corpus", corpus, "--out", (dir / "c.saved").string()});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).at("documents") == 150);

    r = run({"retrieve", "--corpus", corpus, "--query", query, "--top", "5"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).size() == 5);

    r = run({"expand", "--corpus", (dir / "c.saved").string(), "--query", query, "--method", "rel",
             "--embeddings", (dir / "v.txt").string(), "--n", "5"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).at("words").size() == 5);

    r = run({"fit", "--corpus", corpus, "--query", query, "--embeddings", (dir / "v.txt").string(),
             "--iters1", "20", "--iters2", "10", "--k", "6", "--out", result});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "r.json.manifest.toml"));

    std::ofstream(dir / "labels.json") << nlohmann::json{{query, "topic0"}}.dump();
    r = run({"eval", "--result", result, "--corpus", corpus, "--embeddings", (dir / "v.txt").string(),
             "--labels", (dir / "labels.json").string(), "--k", "5"});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(r.out);
    REQUIRE(report.at("queries").size() == 1);
    const auto& q = report.at("queries")[0];
    CHECK(q.contains("diversity"));
    CHECK(q.contains("precision_at_k"));
    CHECK(q.at("precision_at_k").get<double>() >= 0.0);

    // Replaying the manifest reproduces the result.
    const auto replay = (dir / "r2.json").string();
    r = run({"fit", "--config", (dir / "r.json.manifest.toml").string(), "--out", replay});
    REQUIRE(r.code == 0);
    CHECK(read_text(result) == read_text(replay));
  }

  TEST_CASE("unknown config keys are rejected") {
    const auto dir = workdir("config");
    std::ofstream(dir / "bad.toml") << "[synth]\nout = \"x.jsonl\"\nbogus = 3\n";
    const auto r = run({"--config", (dir / "bad.toml").string(), "synth"});
    CHECK(r.code == cli::kExitValidation);
  }
}
