#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "genius/describe.hpp"
#include "genius/embed.hpp"
#include "genius/http_client.hpp"
#include "genius/ingest.hpp"
#include "genius/store.hpp"

namespace genius {

enum class EmbedderKind { kHash, kHttp };
enum class CombinerKind { kTemplate, kHttp };
enum class VisionKind { kNone, kStub, kHttp };

struct PipelineConfig {
  double window_s = kDefaultWindowSeconds;
  std::filesystem::path rules_path;
  EmbedderKind embedder = EmbedderKind::kHash;
  std::optional<std::string> embedder_endpoint;
  std::string embedder_id;  // remote model name; defaults to "http:<endpoint>"
  CombinerKind combiner = CombinerKind::kTemplate;
  std::optional<std::string> combiner_endpoint;
  std::string combiner_prompt = std::string(kDefaultCombinerPrompt);
  VisionKind vision = VisionKind::kNone;
  std::optional<std::string> vision_endpoint;
  std::optional<std::filesystem::path> vision_stub;
  std::string vision_prompt = std::string(kDefaultVisionPrompt);
  std::size_t worker_count = 1;
  http::Options http;

  // Throws InvalidArgument when an http choice lacks its endpoint, the stub
  // vision lacks its canned file, or worker_count is 0.
  void validate() const;
};

std::unique_ptr<Embedder> make_embedder(const PipelineConfig& config, std::size_t expected_dim = 0);
std::unique_ptr<TextCombiner> make_combiner(const PipelineConfig& config);
// nullptr for VisionKind::kNone.
std::unique_ptr<VisionDescriber> make_vision(const PipelineConfig& config);

// Reads every *.json scenario file in dir, ordered by log id then window index.
std::vector<ScenarioFile> load_scenario_dir(const std::filesystem::path& dir);

struct IndexFailure {
  std::string scenario_id;
  std::string message;
};

struct IndexOutcome {
  std::optional<Collection> collection;  // absent when any scenario failed
  std::vector<ScenarioDescription> descriptions;
  std::vector<IndexFailure> failures;
  std::vector<std::string> warnings;
};

// describe -> combine -> embed -> add for every scenario, up to worker_count
// scenarios in flight. Records are added in input order.
IndexOutcome build_index(const std::vector<ScenarioFile>& scenarios, const std::vector<SignalRule>& rules,
                         Embedder& embedder, TextCombiner& combiner, VisionDescriber* vision,
                         std::size_t worker_count, const std::string& collection_name);

}  // namespace genius
