#pragma once

#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "genius/error.hpp"

namespace genius::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string stem = info ? std::string(info->test_suite_name()) + "_" + info->name() : "genius";
    for (char& c : stem) {
      if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    }
    path_ = std::filesystem::temp_directory_path() /
            ("genius_" + stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes <dir>/<log_id>.manifest.json pointing at <log_id>.csv with the given body.
inline std::filesystem::path write_log(const std::filesystem::path& dir, const std::string& log_id,
                                       const std::string& csv) {
  write_text(dir / (log_id + ".csv"), csv);
  const auto manifest = dir / (log_id + ".manifest.json");
  write_text(manifest, R"({"vehicle": "V1", "log_id": ")" + log_id +
                           R"(", "utc_start": "2023-05-04T08:00:00Z", "utc_end": "2023-05-04T09:00:00Z",)"
                           R"( "signals_file": ")" + log_id +
                           R"(.csv", "link_template": "https://viz.example/{scenario_id}"})");
  return manifest;
}

// Code of the genius::Error fn throws, or nullopt when it returns normally.
template <class Fn>
std::optional<Errc> error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace genius::testing
