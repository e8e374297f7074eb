#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "fake_server.hpp"
#include "genius/cli.hpp"
#include "genius/demo.hpp"
#include "genius/store.hpp"
#include "test_support.hpp"

namespace genius {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome genius(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// One demo corpus, ingested and indexed once for the whole suite.
class CliDemo : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    const Outcome demo = genius({"demo", "--out", (*dir_ / "demo").string()});
    ASSERT_EQ(demo.code, 0) << demo.err;
    const Outcome ingest = genius({"ingest", "--manifest", (*dir_ / "demo" / "logs" / "*.manifest.json").string(), "--out",
                               (*dir_ / "scenarios").string()});
    ASSERT_EQ(ingest.code, 0) << ingest.err;
    EXPECT_EQ(ingest.out, "80 scenarios from 8 logs\n");
    const Outcome index = genius(index_args(*dir_ / "store.jsonl"));
    ASSERT_EQ(index.code, 0) << index.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::vector<std::string> index_args(const fs::path& store) {
    return {"index", "--scenarios", (*dir_ / "scenarios").string(), "--rules", (*dir_ / "demo" / "rules.json").string(),
            "--store", store.string(), "--vision", "stub", "--vision-stub", (*dir_ / "demo" / "vision.json").string()};
  }
  static fs::path path(const std::string& name) { return *dir_ / name; }
  static std::string store() { return path("store.jsonl").string(); }

  static TempDir* dir_;
};
TempDir* CliDemo::dir_ = nullptr;

TEST_F(CliDemo, IndexHasEightyRecordsAndIsReproducible) {
  const Collection c = load_collection(store());
  EXPECT_EQ(c.size(), 80u);
  const Outcome again = genius(index_args(path("again.jsonl")));
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(again.out, "indexed 80 scenarios into " + path("again.jsonl").string() + "\n");
  EXPECT_EQ(read_text(store()), read_text(path("again.jsonl")));
  const Outcome parallel = genius([&] {
    auto args = index_args(path("parallel.jsonl"));
    args.insert(args.end(), {"--workers", "3"});
    return args;
  }());
  ASSERT_EQ(parallel.code, 0) << parallel.err;
  EXPECT_EQ(read_text(store()), read_text(path("parallel.jsonl")));
}

TEST_F(CliDemo, IndexFailuresLeaveNoStore) {
  auto args = index_args(path("never.jsonl"));
  args[4] = path("missing_rules.json").string();
  const Outcome no_rules = genius(args);
  EXPECT_EQ(no_rules.code, 2);
  EXPECT_NE(no_rules.err.find("missing_rules.json"), std::string::npos) << no_rules.err;

  args = index_args(path("never.jsonl"));
  args.insert(args.end(), {"--embedder", "http", "--embedder-endpoint", testing::dead_url(), "--retries", "0",
                           "--timeout-ms", "300"});
  const Outcome down = genius(args);
  EXPECT_EQ(down.code, 2);
  EXPECT_NE(down.err.find("store not written"), std::string::npos) << down.err;
  EXPECT_FALSE(fs::exists(path("never.jsonl")));

  args = index_args(path("never.jsonl"));
  args.insert(args.end(), {"--embedder", "http"});
  EXPECT_EQ(genius(args).code, 64);
}

TEST_F(CliDemo, QueryJsonAndTable) {
  const Outcome json_run = genius({"query", "--store", store(), "--text", "tunnel", "--n", "3"});
  ASSERT_EQ(json_run.code, 0) << json_run.err;
  const json doc = json::parse(json_run.out);
  ASSERT_EQ(doc["results"].size(), 3u);
  for (const auto& r : doc["results"]) EXPECT_EQ(r["metadata"]["log_id"], "drive_tunnel");

  const Outcome table = genius({"query", "--store", store(), "--text", "tunnel", "--n", "3", "--format", "table"});
  ASSERT_EQ(table.code, 0);
  EXPECT_EQ(line_count(table.out), 4u);
  EXPECT_EQ(table.out.rfind("rank", 0), 0u);

  EXPECT_EQ(genius({"query", "--store", store(), "--text", "tunnel", "--n", "0"}).code, 64);
  EXPECT_EQ(genius({"query", "--store", store(), "--text", "tunnel", "--format", "xml"}).code, 64);
  EXPECT_EQ(genius({"query", "--store", store(), "--text", "?!"}).code, 2);
  EXPECT_EQ(genius({"query", "--store", path("absent.jsonl").string(), "--text", "tunnel"}).code, 2);
}

TEST_F(CliDemo, QueryFromEnvironmentAndConfig) {
  ::setenv("GENIUS_STORE", store().c_str(), 1);
  const Outcome env = genius({"query", "--text", "tunnel", "--n", "2"});
  ::unsetenv("GENIUS_STORE");
  ASSERT_EQ(env.code, 0) << env.err;
  EXPECT_EQ(json::parse(env.out)["results"].size(), 2u);

  write_text(path("genius.toml"), "[query]\nstore = \"" + store() + "\"\nn = 4\n");
  const Outcome config = genius({"--config", path("genius.toml").string(), "query", "--text", "tunnel"});
  ASSERT_EQ(config.code, 0) << config.err;
  EXPECT_EQ(json::parse(config.out)["results"].size(), 4u);
}

TEST_F(CliDemo, FlagsBeatEnvironmentBeatsConfig) {
  write_text(path("bad_store.toml"), "[query]\nstore = \"" + path("absent.jsonl").string() + "\"\n");
  const std::vector<std::string> args = {"--config", path("bad_store.toml").string(), "query", "--text", "tunnel"};
  EXPECT_EQ(genius(args).code, 2);

  ::setenv("GENIUS_STORE", store().c_str(), 1);
  const Outcome env = genius(args);
  EXPECT_EQ(env.code, 0) << env.err;

  ::setenv("GENIUS_STORE", path("absent.jsonl").c_str(), 1);
  auto with_flag = args;
  with_flag.insert(with_flag.end(), {"--store", store()});
  const Outcome flag = genius(with_flag);
  ::unsetenv("GENIUS_STORE");
  EXPECT_EQ(flag.code, 0) << flag.err;
}

TEST_F(CliDemo, EvalRetrievalOnDemoQueries) {
  const Outcome run = genius({"eval", "retrieval", "--store", store(), "--queries", (*dir_ / "demo" / "queries.json").string(),
                          "--truth", (*dir_ / "demo" / "truth.json").string(), "--out", path("report.json").string(),
                          "--curves", path("curves.csv").string()});
  ASSERT_EQ(run.code, 0) << run.err;
  const json report = json::parse(read_text(path("report.json")));
  EXPECT_EQ(report["record_count"], 80);
  EXPECT_TRUE(report["arlg"].contains("correct"));
  EXPECT_TRUE(report["arlg"].contains("incorrect"));
  EXPECT_GT(report["arlg"]["correct"].get<double>(), report["arlg"]["incorrect"].get<double>());
  for (const auto& q : report["queries"]) {
    if (q["group"] == "correct") EXPECT_TRUE(q["has_answer"].get<bool>()) << q["query"];
    if (q["group"] == "incorrect") EXPECT_FALSE(q["has_answer"].get<bool>()) << q["query"];
  }
  const std::string curves = read_text(path("curves.csv"));
  EXPECT_EQ(line_count(curves), 1 + 80 * report["queries"].size());
  EXPECT_NE(curves.find(",1,"), std::string::npos);
}

TEST_F(CliDemo, EvalRetrievalOnReferenceQueries) {
  json queries = json::array();
  for (const auto& q : demo::reference_queries()) queries.push_back(q);
  write_text(path("reference_queries.json"), queries.dump());
  const Outcome run = genius({"eval", "retrieval", "--store", store(), "--queries", path("reference_queries.json").string(),
                          "--out", path("table_report.json").string()});
  ASSERT_EQ(run.code, 0) << run.err;
  const json report = json::parse(read_text(path("table_report.json")));
  ASSERT_EQ(report["queries"].size(), 4u);
  for (const auto& q : report["queries"]) {
    EXPECT_EQ(q["group"], "test");
    const auto& r = q["report"];
    EXPECT_NEAR(r["range"].get<double>(), r["max_distance"].get<double>() - r["min_distance"].get<double>(), 1e-12);
  }
  EXPECT_FALSE(report.contains("baseline_arlg"));
}

TEST_F(CliDemo, EvalRetrievalRejectsUnknownTruthIds) {
  write_text(path("bad_truth.json"), R"([{"query":"tunnel entrance","correct_ids":["nowhere#0"]}])");
  const Outcome run = genius({"eval", "retrieval", "--store", store(), "--queries", (*dir_ / "demo" / "queries.json").string(),
                          "--truth", path("bad_truth.json").string(), "--out", path("bad.json").string()});
  EXPECT_EQ(run.code, 2);
  EXPECT_NE(run.err.find("nowhere#0"), std::string::npos);
}

TEST(Cli, IngestWritesOneFilePerWindow) {
  TempDir dir;
  std::string csv = "timestamp,v\n";
  for (int t = 0; t < 95; ++t) csv += std::to_string(t) + ",1\n";
  const auto manifest = testing::write_log(dir.path(), "drive", csv);
  const Outcome run = genius({"ingest", "--manifest", manifest.string(), "--out", (dir / "out").string()});
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_EQ(run.out, "3 scenarios from 1 logs\n");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "out")) ++files;
  EXPECT_EQ(files, 3u);
  const Outcome none = genius({"ingest", "--manifest", (dir / "nothing*.json").string(), "--out", (dir / "o2").string()});
  EXPECT_EQ(none.code, 2);
  EXPECT_EQ(genius({"ingest", "--manifest", manifest.string(), "--out", (dir / "o3").string(), "--window", "0"}).code, 64);
}

TEST(Cli, EvalModels) {
  TempDir dir;
  write_text(dir / "runs.json",
             R"({"categories":[{"category":"a","iterations":[{"correct":[1.1],"incorrect":[1.1]},{"correct":[1.1],"incorrect":[1.1]}]}]})");
  const Outcome run = genius({"eval", "models", "--runs", (dir / "runs.json").string(), "--out", (dir / "m.json").string()});
  ASSERT_EQ(run.code, 0) << run.err;
  const json report = json::parse(read_text(dir / "m.json"));
  for (const char* key : {"with_outliers", "without_outliers"}) {
    EXPECT_EQ(report[key]["mean_distance_difference"], 0.0);
    EXPECT_EQ(report[key]["smallest_distance_difference"], 0.0);
    EXPECT_EQ(report[key]["avg_std_dev_of_scenarios"], 0.0);
  }
  write_text(dir / "bad.json", "{}");
  EXPECT_EQ(genius({"eval", "models", "--runs", (dir / "bad.json").string(), "--out", (dir / "m2.json").string()}).code,
            2);
}

TEST(Cli, UsageAndHelp) {
  EXPECT_EQ(genius({}).code, 64);
  EXPECT_EQ(genius({"frobnicate"}).code, 64);
  const Outcome help = genius({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("index"), std::string::npos);
  EXPECT_EQ(genius({"query", "--text", "x"}).code, 64);
}

TEST(Cli, DemoIsDeterministic) {
  TempDir dir;
  ASSERT_EQ(genius({"demo", "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(genius({"demo", "--out", (dir / "b").string()}).code, 0);
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path twin = dir / "b" / fs::relative(e.path(), dir / "a");
    EXPECT_EQ(read_text(e.path()), read_text(twin)) << twin;
  }
}

}  // namespace
}  // namespace genius
