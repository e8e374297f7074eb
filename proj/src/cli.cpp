#include "genius/cli.hpp"

#include <glob.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "genius/demo.hpp"
#include "genius/error.hpp"
#include "genius/evaluate.hpp"
#include "genius/ingest.hpp"
#include "genius/pipeline.hpp"
#include "genius/retrieve.hpp"
#include "genius/service.hpp"
#include "genius/store.hpp"

namespace genius::cli {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// TOML/INI reader that drops entries whose option has its environment variable
// set, so the environment takes precedence over the file.
class EnvFirstConfig : public CLI::ConfigTOML {
 public:
  explicit EnvFirstConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    std::erase_if(items, [this](const CLI::ConfigItem& item) { return overridden(item); });
    return items;
  }

 private:
  bool overridden(const CLI::ConfigItem& item) const {
    const CLI::App* scope = &app_;
    for (const std::string& section : item.parents) {
      if (section == "default") continue;
      scope = scope->get_subcommand_no_throw(section);
      if (scope == nullptr) return false;
    }
    const CLI::Option* opt = scope->get_option_no_throw("--" + item.name);
    return opt != nullptr && !opt->get_envname().empty() && std::getenv(opt->get_envname().c_str()) != nullptr;
  }

  const CLI::App& app_;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, fmt::format("cannot write {}", path.string()));
  out << bytes;
  if (!out) throw Error(Errc::kIoFailure, fmt::format("write failed: {}", path.string()));
}

std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
  std::set<fs::path> found;
  for (const std::string& pattern : patterns) {
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) found.emplace(g.gl_pathv[i]);
    }
    ::globfree(&g);
  }
  return {found.begin(), found.end()};
}

// Adapter flags shared by index, query, eval retrieval.
struct AdapterFlags {
  PipelineConfig config;
  int timeout_ms = 10000;
  int retries = 2;
  int backoff_ms = 200;

  void add_embedder(CLI::App* cmd) {
    const std::map<std::string, EmbedderKind> kinds = {{"hash", EmbedderKind::kHash}, {"http", EmbedderKind::kHttp}};
    cmd->add_option("--embedder", config.embedder, "Embedding backend")
        ->transform(CLI::CheckedTransformer(kinds))
        ->envname("GENIUS_EMBEDDER");
    cmd->add_option("--embedder-endpoint", config.embedder_endpoint, "Base URL of the remote embedder")
        ->envname("GENIUS_EMBEDDER_ENDPOINT");
    cmd->add_option("--embedder-id", config.embedder_id, "Model identifier recorded in the store")
        ->envname("GENIUS_EMBEDDER_ID");
    cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout for remote adapters")
        ->check(CLI::PositiveNumber)
        ->envname("GENIUS_TIMEOUT_MS");
    cmd->add_option("--retries", retries, "Retries after a failed remote request")
        ->check(CLI::NonNegativeNumber)
        ->envname("GENIUS_RETRIES");
    cmd->add_option("--backoff-ms", backoff_ms, "Initial retry backoff, doubled per attempt")
        ->check(CLI::NonNegativeNumber)
        ->envname("GENIUS_BACKOFF_MS");
  }

  void add_describers(CLI::App* cmd) {
    const std::map<std::string, CombinerKind> combiners = {{"template", CombinerKind::kTemplate},
                                                           {"http", CombinerKind::kHttp}};
    const std::map<std::string, VisionKind> visions = {
        {"none", VisionKind::kNone}, {"stub", VisionKind::kStub}, {"http", VisionKind::kHttp}};
    cmd->add_option("--combiner", config.combiner, "Text combiner")
        ->transform(CLI::CheckedTransformer(combiners))
        ->envname("GENIUS_COMBINER");
    cmd->add_option("--combiner-endpoint", config.combiner_endpoint, "Base URL of the text generation service")
        ->envname("GENIUS_COMBINER_ENDPOINT");
    cmd->add_option("--combiner-prompt", config.combiner_prompt,
                    "Prompt template with {signal_text} and {vision_text}");
    cmd->add_option("--vision", config.vision, "Camera frame describer")
        ->transform(CLI::CheckedTransformer(visions))
        ->envname("GENIUS_VISION");
    cmd->add_option("--vision-endpoint", config.vision_endpoint, "Base URL of the vision service")
        ->envname("GENIUS_VISION_ENDPOINT");
    cmd->add_option("--vision-stub", config.vision_stub, "JSON object of canned frame descriptions by scenario id");
    cmd->add_option("--vision-prompt", config.vision_prompt, "Prompt sent with each frame");
    cmd->add_option("--workers", config.worker_count, "Scenarios processed in parallel")
        ->check(CLI::PositiveNumber)
        ->envname("GENIUS_WORKERS");
  }

  PipelineConfig resolved() const {
    PipelineConfig c = config;
    c.http.timeout = std::chrono::milliseconds(timeout_ms);
    c.http.retries = retries;
    c.http.backoff = std::chrono::milliseconds(backoff_ms);
    try {
      c.validate();
    } catch (const Error& e) {
      throw UsageError(e.detail());
    }
    return c;
  }
};

struct QueryEntry {
  std::string query;
  std::string group;  // correct | incorrect | test
};

std::vector<QueryEntry> parse_queries(const fs::path& path) {
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(Errc::kInvalidArgument, fmt::format("{}: expected a JSON array", path.string()));
  }
  std::vector<QueryEntry> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& q = doc[i];
    QueryEntry e;
    if (q.is_string()) {
      e = {q.get<std::string>(), "test"};
    } else if (q.is_object() && q.contains("query") && q["query"].is_string()) {
      e = {q["query"].get<std::string>(), q.value("group", std::string("test"))};
    } else {
      throw Error(Errc::kInvalidArgument, fmt::format("{}: entry {} is not a query", path.string(), i));
    }
    if (e.group != "correct" && e.group != "incorrect" && e.group != "test") {
      throw Error(Errc::kInvalidArgument, fmt::format("{}: query \"{}\" has unknown group \"{}\"", path.string(),
                                                      e.query, e.group));
    }
    out.push_back(std::move(e));
  }
  return out;
}

int cmd_ingest(const std::vector<std::string>& manifests, double window, const fs::path& out_dir, std::ostream& out,
               std::ostream& err) {
  const auto paths = expand_globs(manifests);
  if (paths.empty()) {
    err << "error: no manifest matches";
    for (const auto& m : manifests) err << " " << m;
    err << "\n";
    return kExitDataError;
  }
  std::vector<std::pair<fs::path, std::vector<Scenario>>> segmented;
  std::size_t total = 0;
  for (const fs::path& p : paths) {
    const fs::path manifest = fs::absolute(p).lexically_normal();
    const SignalLog log = load_log(manifest);
    auto scenarios = segment(log, window);
    total += scenarios.size();
    segmented.emplace_back(manifest, std::move(scenarios));
  }
  fs::create_directories(out_dir);
  for (const auto& [manifest, scenarios] : segmented) {
    for (const Scenario& s : scenarios) {
      write_file(out_dir / scenario_file_name(s), scenario_file_json(ScenarioFile{s, manifest}));
    }
  }
  out << fmt::format("{} scenarios from {} logs\n", total, paths.size());
  return kExitOk;
}

int cmd_index(const fs::path& scenario_dir, const fs::path& rules_path, const fs::path& store_path,
              const std::string& name, const AdapterFlags& flags, std::ostream& out, std::ostream& err) {
  PipelineConfig config = flags.resolved();
  config.rules_path = rules_path;
  const auto rules = load_rules(rules_path);
  const auto scenarios = load_scenario_dir(scenario_dir);
  if (scenarios.empty()) {
    err << fmt::format("error: no scenario files in {}\n", scenario_dir.string());
    return kExitDataError;
  }
  auto embedder = make_embedder(config);
  auto combiner = make_combiner(config);
  auto vision = make_vision(config);

  IndexOutcome outcome =
      build_index(scenarios, rules, *embedder, *combiner, vision.get(), config.worker_count, name);
  std::set<std::string> seen;
  for (const std::string& w : outcome.warnings) {
    if (seen.insert(w).second) err << "warning: " << w << "\n";
  }
  if (!outcome.collection) {
    for (const IndexFailure& f : outcome.failures) err << fmt::format("error: {}: {}\n", f.scenario_id, f.message);
    err << fmt::format("error: {} of {} scenarios failed; store not written\n", outcome.failures.size(),
                       scenarios.size());
    return kExitDataError;
  }
  save(*outcome.collection, store_path);
  out << fmt::format("indexed {} scenarios into {}\n", outcome.collection->size(), store_path.string());
  return kExitOk;
}

int cmd_query(const fs::path& store_path, const std::string& text, std::size_t n, const std::string& format,
              const AdapterFlags& flags, std::ostream& out) {
  const PipelineConfig config = flags.resolved();
  const Collection collection = load_collection(store_path);
  auto embedder = make_embedder(config, collection.dim());
  const QueryResult result = search(collection, text, n, *embedder);
  out << (format == "table" ? format_table(result) : to_json(result, 2) + "\n");
  return kExitOk;
}

int cmd_eval_retrieval(const fs::path& store_path, const fs::path& queries_path,
                       const std::optional<fs::path>& truth_path, const fs::path& out_path,
                       const std::optional<fs::path>& curves_path, double z_threshold, const AdapterFlags& flags,
                       std::ostream& out) {
  const PipelineConfig config = flags.resolved();
  const Collection collection = load_collection(store_path);
  auto embedder = make_embedder(config, collection.dim());
  const auto queries = parse_queries(queries_path);
  if (queries.empty()) throw Error(Errc::kEmptyInput, fmt::format("{}: no queries", queries_path.string()));

  std::map<std::string, std::set<std::string>> truth;
  if (truth_path) {
    const auto entries = parse_truth(read_file(*truth_path), truth_path->string());
    check_truth(entries, collection);
    for (const GroundTruth& t : entries) truth[t.query].insert(t.correct_ids.begin(), t.correct_ids.end());
  }

  ordered_json report;
  report["store"] = collection.name();
  report["record_count"] = collection.size();
  report["z_threshold"] = z_threshold;
  report["queries"] = ordered_json::array();
  std::vector<DistanceProfile> profiles;
  std::map<std::string, std::vector<RetrievalReport>> by_group;
  std::size_t answered = 0;

  for (const QueryEntry& q : queries) {
    const auto t = truth.find(q.query);
    DistanceProfile profile;
    try {
      profile = build_profile(collection, q.query, *embedder, t == truth.end() ? nullptr : &t->second);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("query \"{}\": {}", q.query, e.detail()));
    }
    const RetrievalReport metrics = retrieval_metrics(profile);
    by_group[q.group].push_back(metrics);

    ordered_json entry;
    entry["query"] = q.query;
    entry["group"] = q.group;
    entry["report"] = to_json(metrics);
    try {
      const double z = closest_z_score(profile.distances);
      entry["z_score"] = z;
      entry["has_answer"] = z <= z_threshold;
      if (z <= z_threshold) ++answered;
    } catch (const Error& e) {
      entry["z_score"] = nullptr;
      entry["has_answer"] = false;
      entry["z_error"] = e.what();
    }
    report["queries"].push_back(std::move(entry));
    profiles.push_back(std::move(profile));
  }

  ordered_json arlgs = ordered_json::object();
  for (const char* group : {"correct", "incorrect", "test"}) {
    if (by_group.contains(group)) arlgs[group] = arlg(by_group[group]);
  }
  report["arlg"] = arlgs;
  if (arlgs.contains("correct") && arlgs.contains("incorrect")) {
    const double c = arlgs["correct"].get<double>();
    const double i = arlgs["incorrect"].get<double>();
    report["baseline_arlg"] = arlg_baseline(c, i);
    if (arlgs.contains("test")) {
      report["test_verdict"] = verdict_name(arlg_classify(arlgs["test"].get<double>(), c, i));
    }
  }
  report["z_has_answer_count"] = answered;

  write_file(out_path, report.dump(2) + "\n");
  if (curves_path) write_file(*curves_path, distance_curves_csv(profiles));
  out << fmt::format("evaluated {} queries; report written to {}\n", queries.size(), out_path.string());
  return kExitOk;
}

int cmd_eval_models(const fs::path& runs_path, const fs::path& out_path, std::ostream& out) {
  const auto runs = parse_runs(read_file(runs_path), runs_path.string());
  ordered_json report;
  report["with_outliers"] = to_json(model_comparison(runs));
  report["without_outliers"] = to_json(model_comparison_excluding_outliers(runs));
  write_file(out_path, report.dump(2) + "\n");
  out << fmt::format("compared {} categories; report written to {}\n", runs.size(), out_path.string());
  return kExitOk;
}

int cmd_demo(const fs::path& out_dir, std::uint64_t seed, std::ostream& out) {
  const demo::Layout layout = demo::write_corpus(out_dir, seed);
  out << fmt::format("demo corpus written to {}\n", layout.root.string());
  out << fmt::format("  manifests: {}/logs/*.manifest.json ({} logs)\n", layout.root.string(), layout.manifests.size());
  out << fmt::format("  rules:     {}\n  vision:    {}\n  queries:   {}\n  truth:     {}\n", layout.rules.string(),
                     layout.vision_stub.string(), layout.queries.string(), layout.truth.string());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Natural-language scenario retrieval over vehicle logs", "genius"};
  app.set_config("--config", "",
                 "INI/TOML file of option values, one [section] per subcommand (environment and flags override it)");
  app.config_formatter(std::make_shared<EnvFirstConfig>(app));
  app.require_subcommand(1);

  // ingest
  std::vector<std::string> manifests;
  double window = kDefaultWindowSeconds;
  fs::path scenarios_out;
  auto* ingest = app.add_subcommand("ingest", "Segment signal logs into scenario files");
  ingest->add_option("--manifest", manifests, "Manifest path or glob (repeatable)")->required();
  ingest->add_option("--window", window, "Scenario length in seconds")->check(CLI::PositiveNumber)->envname("GENIUS_WINDOW");
  ingest->add_option("--out", scenarios_out, "Directory for scenario files")->required();

  // index
  fs::path scenario_dir;
  fs::path rules_path;
  fs::path store_path;
  std::string collection_name = "scenarios";
  AdapterFlags index_flags;
  auto* index = app.add_subcommand("index", "Describe, embed and store scenarios");
  index->add_option("--scenarios", scenario_dir, "Directory written by ingest")->required();
  index->add_option("--rules", rules_path, "Signal rule set (JSON)")->required()->envname("GENIUS_RULES");
  index->add_option("--store", store_path, "Store file to write")->required()->envname("GENIUS_STORE");
  index->add_option("--name", collection_name, "Collection name");
  index_flags.add_embedder(index);
  index_flags.add_describers(index);

  // query
  std::string query_text;
  std::size_t n = kDefaultResultCount;
  std::string format = "json";
  AdapterFlags query_flags;
  auto* query = app.add_subcommand("query", "Search a store with natural language");
  query->add_option("--store", store_path, "Store file")->required()->envname("GENIUS_STORE");
  query->add_option("--text", query_text, "Query text")->required();
  query->add_option("--n", n, "Number of results")->check(CLI::PositiveNumber);
  query->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "table"}));
  query_flags.add_embedder(query);

  // eval
  auto* eval = app.add_subcommand("eval", "Retrieval and model-comparison metrics");
  eval->require_subcommand(1);
  fs::path queries_path;
  std::optional<fs::path> truth_path;
  fs::path report_path;
  std::optional<fs::path> curves_path;
  double z_threshold = kDefaultZThreshold;
  AdapterFlags eval_flags;
  auto* eval_retrieval = eval->add_subcommand("retrieval", "Per-query gap metrics, ARLG and z-score verdicts");
  eval_retrieval->add_option("--store", store_path, "Store file")->required()->envname("GENIUS_STORE");
  eval_retrieval->add_option("--queries", queries_path, "JSON array of queries or {query, group}")->required();
  eval_retrieval->add_option("--truth", truth_path, "Ground truth: JSON array of {query, correct_ids}");
  eval_retrieval->add_option("--out", report_path, "Report JSON")->required();
  eval_retrieval->add_option("--curves", curves_path, "Distance curves CSV");
  eval_retrieval->add_option("--z-threshold", z_threshold, "Closest-result z-score threshold");
  eval_flags.add_embedder(eval_retrieval);

  fs::path runs_path;
  auto* eval_models = eval->add_subcommand("models", "Model comparison from labelled distance runs");
  eval_models->add_option("--runs", runs_path, "Runs JSON")->required();
  eval_models->add_option("--out", report_path, "Report JSON")->required();

  // demo
  fs::path demo_dir;
  std::uint64_t seed = demo::kDefaultSeed;
  auto* demo_cmd = app.add_subcommand("demo", "Write the synthetic 8-category demo corpus");
  demo_cmd->add_option("--out", demo_dir, "Output directory")->required();
  demo_cmd->add_option("--seed", seed, "Generator seed");

  // serve
  ServerOptions server;
  std::string serve_embedder = "hash";
  std::optional<std::string> serve_endpoint;
  std::string serve_embedder_id;
  auto* serve = app.add_subcommand("serve", "Serve the query API");
  serve->add_option("--store", server.store, "Store file")->required()->envname("GENIUS_STORE");
  serve->add_option("--port", server.port, "Port")->check(CLI::Range(1, 65535))->envname("GENIUS_PORT");
  serve->add_option("--host", server.host, "Bind address")->envname("GENIUS_HOST");
  serve->add_option("--embedder", serve_embedder, "Embedding backend")
      ->check(CLI::IsMember({"hash", "http"}))
      ->envname("GENIUS_EMBEDDER");
  serve->add_option("--embedder-endpoint", serve_endpoint, "Base URL of the remote embedder")
      ->envname("GENIUS_EMBEDDER_ENDPOINT");
  serve->add_option("--embedder-id", serve_embedder_id, "Remote model identifier")->envname("GENIUS_EMBEDDER_ID");
  serve->add_option("--cors-origin", server.cors_origins, "Allowed browser origin (repeatable)")
      ->envname("GENIUS_CORS_ORIGIN");
  serve->add_option("--static-dir", server.static_dir, "Directory of UI assets served at /");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(manifests, window, scenarios_out, out, err);
    if (*index) return cmd_index(scenario_dir, rules_path, store_path, collection_name, index_flags, out, err);
    if (*query) return cmd_query(store_path, query_text, n, format, query_flags, out);
    if (*eval_retrieval) {
      return cmd_eval_retrieval(store_path, queries_path, truth_path, report_path, curves_path, z_threshold,
                                eval_flags, out);
    }
    if (*eval_models) return cmd_eval_models(runs_path, report_path, out);
    if (*demo_cmd) return cmd_demo(demo_dir, seed, out);
    if (*serve) {
      if (serve_embedder == "http" && !serve_endpoint) throw UsageError("--embedder http requires --embedder-endpoint");
      std::shared_ptr<Embedder> embedder;
      if (serve_embedder == "http") {
        embedder = std::make_shared<HttpEmbedder>(*serve_endpoint, serve_embedder_id);
      } else {
        embedder = std::make_shared<HashEmbedder>();
      }
      return run_server(server, std::move(embedder)) ? kExitOk : kExitDataError;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace genius::cli
