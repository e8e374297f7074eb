#pragma once

#include <functional>
#include <string>
#include <thread>

#include <httplib.h>

namespace genius::testing {

// httplib server on an ephemeral loopback port, configured before it starts.
class FakeServer {
 public:
  explicit FakeServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() { stop(); }
  FakeServer(const FakeServer&) = delete;
  FakeServer& operator=(const FakeServer&) = delete;

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

// A loopback URL that refuses connections: the port of a server already stopped.
inline std::string dead_url() {
  FakeServer server([](httplib::Server&) {});
  const std::string url = server.url();
  server.stop();
  return url;
}

}  // namespace genius::testing
