#include <gtest/gtest.h>

#include "fake_server.hpp"
#include "genius/demo.hpp"
#include "genius/pipeline.hpp"
#include "test_support.hpp"

namespace genius {
namespace {

using testing::error_code_of;
using testing::TempDir;

std::vector<ScenarioFile> scenario_files(const std::vector<std::filesystem::path>& manifests) {
  std::vector<ScenarioFile> out;
  for (const auto& m : manifests) {
    for (Scenario& s : segment(load_log(m))) out.push_back({std::move(s), m});
  }
  return out;
}

struct DemoIndex {
  TempDir dir;
  demo::Layout layout = demo::write_corpus(dir.path());
  std::vector<ScenarioFile> scenarios = scenario_files(layout.manifests);
  std::vector<SignalRule> rules = load_rules(layout.rules);
  StubVisionDescriber vision = StubVisionDescriber::from_file(layout.vision_stub);
};

TEST(BuildIndex, DemoCorpusHasEightyRecords) {
  DemoIndex demo;
  HashEmbedder embedder;
  TemplateCombiner combiner;
  const IndexOutcome out = build_index(demo.scenarios, demo.rules, embedder, combiner, &demo.vision, 1, "scenarios");
  ASSERT_TRUE(out.collection.has_value()) << (out.failures.empty() ? "" : out.failures[0].message);
  EXPECT_EQ(out.collection->size(), 80u);
  EXPECT_EQ(out.collection->name(), "scenarios");
  EXPECT_EQ(out.collection->embedder_id(), "hash-fnv1a-256");
  ASSERT_EQ(out.descriptions.size(), 80u);
  for (std::size_t i = 0; i < 80; ++i) {
    EXPECT_EQ(out.descriptions[i].scenario_id, out.collection->info(i).id);
    EXPECT_EQ(out.descriptions[i].combined_text, out.collection->info(i).description);
    EXPECT_FALSE(out.descriptions[i].signal_text.empty());
    EXPECT_FALSE(out.descriptions[i].vision_text.empty());
  }
  EXPECT_TRUE(out.warnings.empty());
}

TEST(BuildIndex, WorkerCountDoesNotChangeResult) {
  DemoIndex demo;
  HashEmbedder embedder;
  TemplateCombiner combiner;
  const IndexOutcome one = build_index(demo.scenarios, demo.rules, embedder, combiner, &demo.vision, 1, "s");
  const IndexOutcome four = build_index(demo.scenarios, demo.rules, embedder, combiner, &demo.vision, 4, "s");
  ASSERT_TRUE(one.collection && four.collection);
  EXPECT_EQ(serialize(*one.collection), serialize(*four.collection));
  EXPECT_EQ(one.descriptions, four.descriptions);
}

TEST(BuildIndex, AnyFailureWithholdsTheCollection) {
  DemoIndex demo;
  HashEmbedder embedder;
  TemplateCombiner combiner;
  demo.scenarios[5].scenario.signal_slice = {290, 400};
  const IndexOutcome out = build_index(demo.scenarios, demo.rules, embedder, combiner, &demo.vision, 2, "s");
  EXPECT_FALSE(out.collection.has_value());
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_EQ(out.failures[0].scenario_id, demo.scenarios[5].scenario.scenario_id);
}

TEST(BuildIndex, UnreachableEmbedderFailsEveryScenario) {
  DemoIndex demo;
  HttpEmbedder embedder(testing::dead_url(), "remote", 0, http::Options{std::chrono::milliseconds(500), 0, std::chrono::milliseconds(0)});
  TemplateCombiner combiner;
  const IndexOutcome out = build_index(demo.scenarios, demo.rules, embedder, combiner, nullptr, 1, "s");
  EXPECT_FALSE(out.collection.has_value());
  EXPECT_EQ(out.failures.size(), 80u);
}

TEST(BuildIndex, NoScenarios) {
  HashEmbedder embedder;
  TemplateCombiner combiner;
  const IndexOutcome out = build_index({}, {}, embedder, combiner, nullptr, 1, "s");
  EXPECT_FALSE(out.collection.has_value());
  EXPECT_EQ(out.failures.size(), 1u);
}

TEST(BuildIndex, MissingLogIsReportedPerScenario) {
  DemoIndex demo;
  std::filesystem::remove(demo.dir / "logs" / "drive_rain.csv");
  HashEmbedder embedder;
  TemplateCombiner combiner;
  const IndexOutcome out = build_index(demo.scenarios, demo.rules, embedder, combiner, &demo.vision, 1, "s");
  EXPECT_FALSE(out.collection.has_value());
  EXPECT_EQ(out.failures.size(), 10u);
}

TEST(ScenarioDir, OrderedByLogThenWindow) {
  TempDir dir;
  const auto manifest = testing::write_log(dir.path(), "drive", "timestamp,v\n0,1\n");
  for (const std::size_t k : {10u, 2u, 0u}) {
    Scenario s;
    s.scenario_id = make_scenario_id("drive", k);
    s.log_id = "drive";
    s.window_start = 30.0 * k;
    s.window_end = s.window_start + 30.0;
    testing::write_text(dir / "scenarios" / scenario_file_name(s), scenario_file_json({s, manifest}));
  }
  testing::write_text(dir / "scenarios" / "notes.txt", "ignored");
  const auto files = load_scenario_dir(dir / "scenarios");
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].scenario.scenario_id, "drive#0");
  EXPECT_EQ(files[1].scenario.scenario_id, "drive#2");
  EXPECT_EQ(files[2].scenario.scenario_id, "drive#10");
  EXPECT_EQ(error_code_of([&] { load_scenario_dir(dir / "absent"); }), Errc::kMissingFile);
}

TEST(Config, Validate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.embedder = EmbedderKind::kHttp;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::kInvalidArgument);
  c.embedder_endpoint = "http://127.0.0.1:1";
  EXPECT_NO_THROW(c.validate());
  c.vision = VisionKind::kStub;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::kInvalidArgument);
  c.vision_stub = "stub.json";
  c.combiner = CombinerKind::kHttp;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::kInvalidArgument);
  c.combiner_endpoint = "http://127.0.0.1:1";
  c.worker_count = 0;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::kInvalidArgument);
  c.worker_count = 2;
  c.window_s = 0.0;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), Errc::kInvalidArgument);
}

TEST(Config, Factories) {
  PipelineConfig c;
  EXPECT_EQ(make_embedder(c)->id(), "hash-fnv1a-256");
  EXPECT_EQ(make_vision(c), nullptr);
  EXPECT_NE(dynamic_cast<TemplateCombiner*>(make_combiner(c).get()), nullptr);
  c.embedder = EmbedderKind::kHttp;
  c.embedder_endpoint = "http://127.0.0.1:1";
  c.embedder_id = "bge";
  EXPECT_EQ(make_embedder(c)->id(), "bge");
}

}  // namespace
}  // namespace genius
