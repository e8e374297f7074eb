#include "genius/service.hpp"

#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "genius/error.hpp"
#include "genius/retrieve.hpp"

namespace genius {
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kJson = "application/json";

HttpResponse error_response(int status, std::string_view message) {
  ordered_json body;
  body["error"] = message;
  return {status, body.dump(-1, ' ', false, ordered_json::error_handler_t::replace)};
}

int status_for(Errc code) {
  switch (code) {
    case Errc::kNoTokens:
    case Errc::kInvalidArgument: return 400;
    case Errc::kEmbedderMismatch:
    case Errc::kDimensionMismatch: return 409;
    case Errc::kUnknownId: return 404;
    default: return 503;
  }
}

}  // namespace

std::string_view service_state_name(ServiceState state) {
  switch (state) {
    case ServiceState::kLoading: return "loading";
    case ServiceState::kOk: return "ok";
    case ServiceState::kDegraded: return "degraded";
  }
  return "unknown";
}

ScenarioService::ScenarioService(std::shared_ptr<Embedder> embedder, std::vector<std::string> cors_origins)
    : embedder_(std::move(embedder)), cors_origins_(std::move(cors_origins)), started_(std::chrono::steady_clock::now()) {}

void ScenarioService::load(const std::filesystem::path& store_path) {
  try {
    publish(load_collection(store_path));
  } catch (const Error&) {
    load_failed_.store(true);
    throw;
  }
}

void ScenarioService::publish(Collection collection) {
  std::lock_guard lock(publish_mutex_);
  if (owner_) throw Error(Errc::kInvalidArgument, "a collection is already published");
  owner_ = std::make_unique<ConcurrentCollection>(std::move(collection));
  collection_.store(owner_.get(), std::memory_order_release);
}

ServiceStatus ScenarioService::status() const {
  ServiceStatus s;
  s.embedder_id = embedder_->id();
  s.uptime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  const ConcurrentCollection* c = collection_.load(std::memory_order_acquire);
  if (c == nullptr) {
    s.state = load_failed_.load() ? ServiceState::kDegraded : ServiceState::kLoading;
    return s;
  }
  s.collection_name = c->read([](const Collection& col) { return col.name(); });
  s.record_count = c->size();
  s.state = embedder_->healthy() ? ServiceState::kOk : ServiceState::kDegraded;
  return s;
}

HttpResponse ScenarioService::not_ready() const {
  const ServiceState state = load_failed_.load() ? ServiceState::kDegraded : ServiceState::kLoading;
  ordered_json body;
  body["error"] = "collection not loaded";
  body["state"] = service_state_name(state);
  return {503, body.dump()};
}

HttpResponse ScenarioService::handle_query(std::string_view body) const {
  const ConcurrentCollection* c = collection_.load(std::memory_order_acquire);
  if (c == nullptr) return not_ready();

  const ordered_json doc = ordered_json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return error_response(400, "body must be a JSON object");
  if (!doc.contains("text") || !doc["text"].is_string()) return error_response(400, "\"text\" must be a string");
  std::size_t n = kDefaultResultCount;
  if (doc.contains("n")) {
    if (!doc["n"].is_number_integer() || doc["n"].get<long long>() < 1) {
      return error_response(400, "\"n\" must be a positive integer");
    }
    n = doc["n"].get<std::size_t>();
  }
  const std::string text = doc["text"].get<std::string>();
  try {
    const QueryResult result = c->read([&](const Collection& col) { return search(col, text, n, *embedder_); });
    return {200, to_json(result)};
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  }
}

HttpResponse ScenarioService::handle_status() const {
  const ServiceStatus s = status();
  ordered_json body;
  body["state"] = service_state_name(s.state);
  body["collection_name"] = s.collection_name;
  body["record_count"] = s.record_count;
  body["embedder_id"] = s.embedder_id;
  body["uptime_s"] = s.uptime_s;
  return {200, body.dump()};
}

HttpResponse ScenarioService::handle_scenario(std::string_view id) const {
  const ConcurrentCollection* c = collection_.load(std::memory_order_acquire);
  if (c == nullptr) return not_ready();
  return c->read([&](const Collection& col) -> HttpResponse {
    const std::size_t index = col.find(id);
    if (index == Collection::npos) return error_response(404, fmt::format("unknown scenario {}", id));
    const RecordInfo& info = col.info(index);
    ordered_json body;
    body["id"] = info.id;
    body["description"] = info.description;
    body["metadata"] = {{"vehicle", info.metadata.vehicle},
                        {"log_id", info.metadata.log_id},
                        {"window_start", info.metadata.window_start},
                        {"link", info.metadata.link}};
    return {200, body.dump(-1, ' ', false, ordered_json::error_handler_t::replace)};
  });
}

std::optional<std::string> ScenarioService::allowed_origin(std::string_view origin) const {
  for (const std::string& allowed : cors_origins_) {
    if (allowed == "*") return std::string("*");
    if (!origin.empty() && allowed == origin) return allowed;
  }
  return std::nullopt;
}

void ScenarioService::mount(httplib::Server& server) {
  const auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, std::string(kJson));
  };

  server.Post("/api/query", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_query(req.body));
  });
  server.Get("/api/status", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_status());
  });
  server.Get(R"(/api/scenario/(.+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_scenario(req.matches[1].str()));
  });
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    ordered_json body;
    body["error"] = fmt::format("HTTP {} for {}", res.status, req.path);
    res.set_content(body.dump(), std::string(kJson));
  });

  server.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    const auto origin = allowed_origin(req.get_header_value("Origin"));
    if (!origin) return;
    res.set_header("Access-Control-Allow-Origin", *origin);
    res.set_header("Vary", "Origin");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

bool run_server(const ServerOptions& options, std::shared_ptr<Embedder> embedder) {
  ScenarioService service(std::move(embedder), options.cors_origins);
  httplib::Server server;
  service.mount(server);
  if (options.static_dir && !server.set_mount_point("/", options.static_dir->string())) {
    throw Error(Errc::kMissingFile, fmt::format("static directory {} not found", options.static_dir->string()));
  }

  std::thread loader([&service, &options] {
    try {
      service.load(options.store);
      fmt::print(stderr, "loaded {} records from {}\n", service.collection()->size(), options.store.string());
    } catch (const Error& e) {
      fmt::print(stderr, "error: {}\n", e.what());
    }
  });
  fmt::print(stderr, "listening on {}:{}\n", options.host, options.port);
  const bool ok = server.listen(options.host, options.port);
  loader.join();
  return ok;
}

}  // namespace genius
