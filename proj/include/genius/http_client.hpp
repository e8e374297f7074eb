#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace genius::http {

struct Options {
  std::chrono::milliseconds timeout{10000};
  int retries = 2;  // extra attempts after the first
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
};

struct Reply {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to base_url + path. Connection failures and 5xx replies are
// retried; returns nullopt when the service never answered.
std::optional<Reply> post_json(const std::string& base_url, const std::string& path, const std::string& body,
                               const Options& options);

// True when anything answers HTTP at base_url.
bool reachable(const std::string& base_url, std::chrono::milliseconds timeout);

std::string base64_encode(const std::string& bytes);

}  // namespace genius::http
