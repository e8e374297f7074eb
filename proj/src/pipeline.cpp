#include "genius/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "genius/error.hpp"

namespace genius {
namespace fs = std::filesystem;

namespace {

std::size_t window_index(const std::string& scenario_id) {
  const std::size_t hash = scenario_id.rfind('#');
  std::size_t index = 0;
  if (hash != std::string::npos) {
    std::from_chars(scenario_id.data() + hash + 1, scenario_id.data() + scenario_id.size(), index);
  }
  return index;
}

struct Slot {
  std::optional<ScenarioDescription> description;
  std::optional<EmbeddingVector> vector;
  std::vector<std::string> warnings;
  std::string error;
};

}  // namespace

void PipelineConfig::validate() const {
  if (!(window_s > 0.0)) throw Error(Errc::kInvalidArgument, "window must be positive");
  if (worker_count == 0) throw Error(Errc::kInvalidArgument, "worker count must be at least 1");
  if (embedder == EmbedderKind::kHttp && !embedder_endpoint) {
    throw Error(Errc::kInvalidArgument, "--embedder http requires --embedder-endpoint");
  }
  if (combiner == CombinerKind::kHttp && !combiner_endpoint) {
    throw Error(Errc::kInvalidArgument, "--combiner http requires --combiner-endpoint");
  }
  if (vision == VisionKind::kHttp && !vision_endpoint) {
    throw Error(Errc::kInvalidArgument, "--vision http requires --vision-endpoint");
  }
  if (vision == VisionKind::kStub && !vision_stub) {
    throw Error(Errc::kInvalidArgument, "--vision stub requires --vision-stub");
  }
}

std::unique_ptr<Embedder> make_embedder(const PipelineConfig& config, std::size_t expected_dim) {
  if (config.embedder == EmbedderKind::kHttp) {
    return std::make_unique<HttpEmbedder>(*config.embedder_endpoint, config.embedder_id, expected_dim, config.http);
  }
  return std::make_unique<HashEmbedder>();
}

std::unique_ptr<TextCombiner> make_combiner(const PipelineConfig& config) {
  if (config.combiner == CombinerKind::kHttp) {
    return std::make_unique<HttpTextCombiner>(*config.combiner_endpoint, config.combiner_prompt, config.http);
  }
  return std::make_unique<TemplateCombiner>();
}

std::unique_ptr<VisionDescriber> make_vision(const PipelineConfig& config) {
  switch (config.vision) {
    case VisionKind::kNone: return nullptr;
    case VisionKind::kStub: return std::make_unique<StubVisionDescriber>(StubVisionDescriber::from_file(*config.vision_stub));
    case VisionKind::kHttp:
      return std::make_unique<HttpVisionDescriber>(*config.vision_endpoint, config.vision_prompt, config.http);
  }
  return nullptr;
}

std::vector<ScenarioFile> load_scenario_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(Errc::kMissingFile, fmt::format("{} is not a directory", dir.string()));
  std::vector<ScenarioFile> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    out.push_back(parse_scenario_file(read_file(entry.path()), entry.path().string()));
  }
  std::sort(out.begin(), out.end(), [](const ScenarioFile& a, const ScenarioFile& b) {
    const auto ka = std::make_pair(a.scenario.log_id, window_index(a.scenario.scenario_id));
    const auto kb = std::make_pair(b.scenario.log_id, window_index(b.scenario.scenario_id));
    return ka < kb;
  });
  return out;
}

IndexOutcome build_index(const std::vector<ScenarioFile>& scenarios, const std::vector<SignalRule>& rules,
                         Embedder& embedder, TextCombiner& combiner, VisionDescriber* vision,
                         std::size_t worker_count, const std::string& collection_name) {
  IndexOutcome outcome;

  std::map<fs::path, std::shared_ptr<const SignalLog>> logs;
  std::map<fs::path, std::string> log_errors;
  for (const ScenarioFile& f : scenarios) {
    if (logs.contains(f.manifest_path) || log_errors.contains(f.manifest_path)) continue;
    try {
      logs.emplace(f.manifest_path, std::make_shared<const SignalLog>(load_log(f.manifest_path)));
    } catch (const Error& e) {
      log_errors.emplace(f.manifest_path, e.what());
    }
  }

  std::vector<Slot> slots(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < scenarios.size(); i = next.fetch_add(1)) {
      const ScenarioFile& f = scenarios[i];
      const Scenario& s = f.scenario;
      Slot& slot = slots[i];
      try {
        if (const auto it = log_errors.find(f.manifest_path); it != log_errors.end()) {
          throw std::runtime_error(it->second);
        }
        const SignalLog& log = *logs.at(f.manifest_path);
        if (s.signal_slice.end > log.row_count()) {
          throw Error(Errc::kInvalidArgument,
                      fmt::format("rows [{}, {}) exceed log {} with {} rows", s.signal_slice.begin, s.signal_slice.end,
                                  s.log_id, log.row_count()));
        }
        SignalText signal = describe_signals(s, log, rules);
        slot.warnings = std::move(signal.warnings);
        std::string vision_text = vision != nullptr ? describe_frame(s.frame_ref, *vision) : std::string();
        std::string combined = combine(signal.text, vision_text, combiner);
        slot.vector = embed(combined, embedder);
        slot.description = ScenarioDescription{s.scenario_id, std::move(signal.text), std::move(vision_text),
                                               std::move(combined)};
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(worker_count, scenarios.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (std::string& w : slots[i].warnings) outcome.warnings.push_back(std::move(w));
    if (!slots[i].error.empty()) {
      outcome.failures.push_back(IndexFailure{scenarios[i].scenario.scenario_id, slots[i].error});
    }
  }
  if (!outcome.failures.empty()) return outcome;
  if (scenarios.empty()) {
    outcome.failures.push_back(IndexFailure{"", "no scenarios to index"});
    return outcome;
  }

  Collection collection(collection_name, embedder.id(), slots.front().vector->dim());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Scenario& s = scenarios[i].scenario;
    try {
      collection.add(EmbeddedRecord{s.scenario_id, std::move(*slots[i].vector), slots[i].description->combined_text,
                                    RecordMetadata{s.vehicle, s.log_id, s.window_start, s.link}});
    } catch (const Error& e) {
      outcome.failures.push_back(IndexFailure{s.scenario_id, e.what()});
    }
    outcome.descriptions.push_back(std::move(*slots[i].description));
  }
  if (outcome.failures.empty()) outcome.collection = std::move(collection);
  return outcome;
}

}  // namespace genius
