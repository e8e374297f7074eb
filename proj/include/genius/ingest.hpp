#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace genius {

inline constexpr double kDefaultWindowSeconds = 30.0;

struct LogManifest {
  std::string vehicle;
  std::string log_id;
  double utc_start = 0.0;  // epoch seconds
  double utc_end = 0.0;
  std::filesystem::path signals_file;  // resolved against the manifest directory
  std::optional<std::filesystem::path> frames_dir;
  std::string link_template;  // contains "{scenario_id}"

  bool operator==(const LogManifest&) const = default;
};

// Parses manifest JSON. Relative paths resolve against base_dir. Unknown keys
// and violated invariants raise MalformedManifest.
LogManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir,
                           std::string_view source = "<manifest>");
LogManifest load_manifest(const std::filesystem::path& manifest_path);

// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z|+00:00]" into epoch seconds.
std::optional<double> parse_utc(std::string_view text);

// Column-major signal table for one drive.
class SignalLog {
 public:
  SignalLog(LogManifest manifest, std::vector<double> timestamps, std::vector<std::string> names,
            std::vector<std::vector<double>> columns);

  const LogManifest& manifest() const noexcept { return manifest_; }
  std::span<const double> timestamps() const noexcept { return timestamps_; }
  std::size_t row_count() const noexcept { return timestamps_.size(); }
  std::size_t column_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  std::optional<std::span<const double>> column(std::string_view name) const;

  bool operator==(const SignalLog& other) const;

 private:
  LogManifest manifest_;
  std::vector<double> timestamps_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parses the signals CSV for a manifest. `source` names the file in errors.
SignalLog parse_signal_csv(LogManifest manifest, std::string_view csv_text, std::string_view source);

SignalLog load_log(const std::filesystem::path& manifest_path);

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

struct Scenario {
  std::string scenario_id;
  std::string vehicle;
  std::string log_id;
  double window_start = 0.0;
  double window_end = 0.0;
  RowRange signal_slice;
  std::optional<std::filesystem::path> frame_ref;
  std::string link;

  bool operator==(const Scenario&) const = default;
};

std::string make_scenario_id(std::string_view log_id, std::size_t index);
std::string render_link(std::string_view link_template, std::string_view scenario_id);

// Exclusive end of the time span a log covers: last timestamp plus the last
// sampling interval. A single-row log covers nothing.
double coverage_end(const SignalLog& log);

// Tiles the log from its first timestamp in steps of window_s, dropping a
// trailing partial window.
std::vector<Scenario> segment(const SignalLog& log, double window_s = kDefaultWindowSeconds);

// Scenario files written by `genius ingest`: the scenario plus the manifest it
// came from, so the signal slice can be re-read at index time.
struct ScenarioFile {
  Scenario scenario;
  std::filesystem::path manifest_path;

  bool operator==(const ScenarioFile&) const = default;
};

std::string scenario_file_json(const ScenarioFile& file);
ScenarioFile parse_scenario_file(std::string_view json_text, std::string_view source = "<scenario>");
std::string scenario_file_name(const Scenario& scenario);

std::string read_file(const std::filesystem::path& path);

}  // namespace genius
