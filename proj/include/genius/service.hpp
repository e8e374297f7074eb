#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genius/embed.hpp"
#include "genius/store.hpp"

namespace httplib {
class Server;
}

namespace genius {

enum class ServiceState { kLoading, kOk, kDegraded };

std::string_view service_state_name(ServiceState state);

struct ServiceStatus {
  ServiceState state = ServiceState::kLoading;
  std::string collection_name;
  std::size_t record_count = 0;
  std::string embedder_id;
  double uptime_s = 0.0;
};

struct HttpResponse {
  int status = 200;
  std::string body;  // always JSON
};

// Backs the HTTP API: POST /api/query, GET /api/status, GET /api/scenario/{id}.
// The collection is published once; until then queries answer 503.
class ScenarioService {
 public:
  explicit ScenarioService(std::shared_ptr<Embedder> embedder, std::vector<std::string> cors_origins = {});

  // Loads the store file; on failure the service reports "degraded".
  void load(const std::filesystem::path& store_path);
  void publish(Collection collection);

  // nullptr until a collection is published.
  ConcurrentCollection* collection() noexcept { return collection_.load(std::memory_order_acquire); }

  ServiceStatus status() const;

  HttpResponse handle_query(std::string_view body) const;
  HttpResponse handle_status() const;
  HttpResponse handle_scenario(std::string_view id) const;

  // Allowed CORS origin for a request Origin header, if any.
  std::optional<std::string> allowed_origin(std::string_view origin) const;

  // Registers the API routes, CORS handling and JSON error bodies.
  void mount(httplib::Server& server);

 private:
  HttpResponse not_ready() const;

  std::shared_ptr<Embedder> embedder_;
  std::vector<std::string> cors_origins_;
  std::chrono::steady_clock::time_point started_;
  std::mutex publish_mutex_;
  std::unique_ptr<ConcurrentCollection> owner_;
  std::atomic<ConcurrentCollection*> collection_{nullptr};
  std::atomic<bool> load_failed_{false};
};

struct ServerOptions {
  std::filesystem::path store;
  int port = 8080;
  std::string host = "0.0.0.0";
  std::vector<std::string> cors_origins;
  std::optional<std::filesystem::path> static_dir;
};

// Serves until the process is stopped. The store loads in the background so
// /api/status answers "loading" meanwhile. Returns false if the port cannot be bound.
bool run_server(const ServerOptions& options, std::shared_ptr<Embedder> embedder);

}  // namespace genius
