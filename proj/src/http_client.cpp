#include "genius/http_client.hpp"

#include <thread>

#include <httplib.h>

namespace genius::http {
namespace {

httplib::Client make_client(const std::string& base_url, std::chrono::milliseconds timeout) {
  httplib::Client client(base_url);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  return client;
}

}  // namespace

std::optional<Reply> post_json(const std::string& base_url, const std::string& path, const std::string& body,
                               const Options& options) {
  std::optional<Reply> last;
  auto delay = options.backoff;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client = make_client(base_url, options.timeout);
    auto res = client.Post(path, body, "application/json");
    if (!res) continue;
    last = Reply{res->status, res->body};
    if (res->status < 500) break;
  }
  return last;
}

bool reachable(const std::string& base_url, std::chrono::milliseconds timeout) {
  httplib::Client client = make_client(base_url, timeout);
  return static_cast<bool>(client.Get("/"));
}

std::string base64_encode(const std::string& bytes) { return httplib::detail::base64_encode(bytes); }

}  // namespace genius::http
