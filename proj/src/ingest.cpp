#include "genius/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "genius/csv.hpp"
#include "genius/error.hpp"

namespace genius {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kPlaceholder = "{scenario_id}";

[[noreturn]] void malformed(std::string_view source, const std::string& what) {
  throw Error(Errc::kMalformedManifest, fmt::format("{}: {}", source, what));
}

const json& require(const json& obj, const char* key, std::string_view source) {
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(source, fmt::format("missing field \"{}\"", key));
  return *it;
}

std::string require_string(const json& obj, const char* key, std::string_view source) {
  const json& v = require(obj, key, source);
  if (!v.is_string()) malformed(source, fmt::format("field \"{}\" must be a string", key));
  return v.get<std::string>();
}

double require_time(const json& obj, const char* key, std::string_view source) {
  const json& v = require(obj, key, source);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    if (auto t = parse_utc(v.get<std::string>())) return *t;
  }
  malformed(source, fmt::format("field \"{}\" is not a UTC timestamp", key));
}

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

}  // namespace

std::optional<double> parse_utc(std::string_view text) {
  std::string s(text);
  std::tm tm{};
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                  &tm.tm_min, &tm.tm_sec, &consumed) != 6 ||
      consumed != 19) {
    return std::nullopt;
  }
  std::string_view rest = std::string_view(s).substr(19);
  double fraction = 0.0;
  if (!rest.empty() && rest.front() == '.') {
    std::size_t n = 1;
    while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
    if (n == 1) return std::nullopt;
    if (!parse_double(std::string("0") + std::string(rest.substr(0, n)), fraction)) return std::nullopt;
    rest.remove_prefix(n);
  }
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) return std::nullopt;
  if (tm.tm_mon < 1 || tm.tm_mon > 12 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 || tm.tm_min > 59 ||
      tm.tm_sec > 60) {
    return std::nullopt;
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return static_cast<double>(timegm(&tm)) + fraction;
}

std::string read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(Errc::kMissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(Errc::kIoFailure, fmt::format("read failed: {}", path.string()));
  return std::move(buf).str();
}

LogManifest parse_manifest(std::string_view json_text, const fs::path& base_dir, std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed(source, e.what());
  }
  if (!doc.is_object()) malformed(source, "manifest must be a JSON object");

  static constexpr std::string_view kKnown[] = {"vehicle",      "log_id",     "utc_start",    "utc_end",
                                                "signals_file", "frames_dir", "link_template"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      malformed(source, fmt::format("unknown key \"{}\"", key));
    }
  }

  LogManifest m;
  m.vehicle = require_string(doc, "vehicle", source);
  m.log_id = require_string(doc, "log_id", source);
  if (m.vehicle.empty()) malformed(source, "vehicle is empty");
  if (m.log_id.empty()) malformed(source, "log_id is empty");
  m.utc_start = require_time(doc, "utc_start", source);
  m.utc_end = require_time(doc, "utc_end", source);
  if (!(m.utc_start < m.utc_end)) malformed(source, "utc_start must precede utc_end");

  const fs::path signals = require_string(doc, "signals_file", source);
  m.signals_file = signals.is_absolute() ? signals : base_dir / signals;

  if (const auto it = doc.find("frames_dir"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) malformed(source, "field \"frames_dir\" must be a string or null");
    const fs::path frames = it->get<std::string>();
    m.frames_dir = frames.is_absolute() ? frames : base_dir / frames;
  }

  m.link_template = require_string(doc, "link_template", source);
  if (m.link_template.find(kPlaceholder) == std::string::npos) {
    malformed(source, "link_template lacks the {scenario_id} placeholder");
  }
  return m;
}

LogManifest load_manifest(const fs::path& manifest_path) {
  const std::string text = read_file(manifest_path);
  return parse_manifest(text, manifest_path.parent_path(), manifest_path.string());
}

SignalLog::SignalLog(LogManifest manifest, std::vector<double> timestamps, std::vector<std::string> names,
                     std::vector<std::vector<double>> columns)
    : manifest_(std::move(manifest)),
      timestamps_(std::move(timestamps)),
      names_(std::move(names)),
      columns_(std::move(columns)) {
  if (names_.size() != columns_.size()) {
    throw Error(Errc::kRaggedColumns, fmt::format("{} names for {} columns", names_.size(), columns_.size()));
  }
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    if (!(timestamps_[i] > timestamps_[i - 1])) {
      throw Error(Errc::kNonMonotonicTimestamps, fmt::format("row {}: {} after {}", i, timestamps_[i],
                                                             timestamps_[i - 1]));
    }
  }
  index_.reserve(names_.size());
  for (std::size_t c = 0; c < names_.size(); ++c) {
    if (columns_[c].size() != timestamps_.size()) {
      throw Error(Errc::kRaggedColumns, fmt::format("column \"{}\" has {} rows, expected {}", names_[c],
                                                    columns_[c].size(), timestamps_.size()));
    }
    if (!index_.emplace(names_[c], c).second) {
      throw Error(Errc::kMalformedCsv, fmt::format("duplicate column \"{}\"", names_[c]));
    }
  }
}

std::optional<std::span<const double>> SignalLog::column(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(columns_[it->second]);
}

bool SignalLog::operator==(const SignalLog& other) const {
  return manifest_ == other.manifest_ && timestamps_ == other.timestamps_ && names_ == other.names_ &&
         columns_ == other.columns_;
}

SignalLog parse_signal_csv(LogManifest manifest, std::string_view csv_text, std::string_view source) {
  csv::Reader reader(csv_text);
  std::vector<std::string_view> fields;
  if (!reader.next(fields)) {
    throw Error(Errc::kMalformedCsv, fmt::format("{}: missing header row", source));
  }
  if (fields.empty() || fields.front() != "timestamp") {
    throw Error(Errc::kMalformedCsv, fmt::format("{}:1: first column must be \"timestamp\"", source));
  }
  std::vector<std::string> names(fields.begin() + 1, fields.end());
  const std::size_t width = fields.size();

  std::vector<double> timestamps;
  std::vector<std::vector<double>> columns(names.size());
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields.front().empty()) continue;  // blank line
    const std::size_t line = reader.line();
    if (fields.size() != width) {
      throw Error(Errc::kRaggedColumns,
                  fmt::format("{}:{}: {} cells, header has {}", source, line, fields.size(), width));
    }
    double value = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_double(fields[c], value)) {
        const std::string_view column = c == 0 ? std::string_view("timestamp") : std::string_view(names[c - 1]);
        throw Error(Errc::kNonNumericCell,
                    fmt::format("{}:{}: column \"{}\" holds \"{}\"", source, line, column, fields[c]));
      }
      if (c == 0) {
        if (!timestamps.empty() && !(value > timestamps.back())) {
          throw Error(Errc::kNonMonotonicTimestamps,
                      fmt::format("{}:{}: timestamp {} does not exceed {}", source, line, value, timestamps.back()));
        }
        timestamps.push_back(value);
      } else {
        columns[c - 1].push_back(value);
      }
    }
  }
  return SignalLog(std::move(manifest), std::move(timestamps), std::move(names), std::move(columns));
}

SignalLog load_log(const fs::path& manifest_path) {
  LogManifest manifest = load_manifest(manifest_path);
  const fs::path signals = manifest.signals_file;
  const std::string text = read_file(signals);
  return parse_signal_csv(std::move(manifest), text, signals.string());
}

std::string make_scenario_id(std::string_view log_id, std::size_t index) {
  return fmt::format("{}#{}", log_id, index);
}

std::string render_link(std::string_view link_template, std::string_view scenario_id) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = link_template.find(kPlaceholder, pos);
    if (hit == std::string_view::npos) break;
    out.append(link_template.substr(pos, hit - pos));
    out.append(scenario_id);
    pos = hit + kPlaceholder.size();
  }
  out.append(link_template.substr(pos));
  return out;
}

double coverage_end(const SignalLog& log) {
  const auto ts = log.timestamps();
  if (ts.empty()) return 0.0;
  if (ts.size() == 1) return ts.front();
  return ts.back() + (ts.back() - ts[ts.size() - 2]);
}

std::vector<Scenario> segment(const SignalLog& log, double window_s) {
  if (!(window_s > 0.0) || !std::isfinite(window_s)) {
    throw Error(Errc::kInvalidArgument, fmt::format("window must be positive, got {}", window_s));
  }
  const auto ts = log.timestamps();
  if (ts.empty()) {
    throw Error(Errc::kEmptyLog, fmt::format("log {} has no rows", log.manifest().log_id));
  }
  const double first = ts.front();
  const double span = coverage_end(log) - first;
  // Relative slack absorbs rounding in e.g. 94.9 + 0.1.
  const auto count = static_cast<std::size_t>(std::floor(span / window_s + 1e-9));

  const LogManifest& m = log.manifest();
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Scenario s;
    s.scenario_id = make_scenario_id(m.log_id, k);
    s.vehicle = m.vehicle;
    s.log_id = m.log_id;
    s.window_start = first + static_cast<double>(k) * window_s;
    s.window_end = first + static_cast<double>(k + 1) * window_s;
    const auto lo = std::lower_bound(ts.begin(), ts.end(), s.window_start);
    const auto hi = std::lower_bound(ts.begin(), ts.end(), s.window_end);
    s.signal_slice = {static_cast<std::size_t>(lo - ts.begin()), static_cast<std::size_t>(hi - ts.begin())};
    if (m.frames_dir) {
      fs::path frame = *m.frames_dir / (s.scenario_id + ".jpg");
      std::error_code ec;
      if (fs::is_regular_file(frame, ec)) s.frame_ref = std::move(frame);
    }
    s.link = render_link(m.link_template, s.scenario_id);
    out.push_back(std::move(s));
  }
  return out;
}

std::string scenario_file_json(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  json doc = {
      {"scenario_id", s.scenario_id},
      {"vehicle", s.vehicle},
      {"log_id", s.log_id},
      {"window_start", s.window_start},
      {"window_end", s.window_end},
      {"rows", {s.signal_slice.begin, s.signal_slice.end}},
      {"frame_ref", s.frame_ref ? json(s.frame_ref->string()) : json(nullptr)},
      {"link", s.link},
      {"manifest", file.manifest_path.string()},
  };
  return doc.dump(2) + "\n";
}

ScenarioFile parse_scenario_file(std::string_view json_text, std::string_view source) {
  try {
    const json doc = json::parse(json_text);
    ScenarioFile out;
    Scenario& s = out.scenario;
    s.scenario_id = doc.at("scenario_id").get<std::string>();
    s.vehicle = doc.at("vehicle").get<std::string>();
    s.log_id = doc.at("log_id").get<std::string>();
    s.window_start = doc.at("window_start").get<double>();
    s.window_end = doc.at("window_end").get<double>();
    const json& rows = doc.at("rows");
    s.signal_slice = {rows.at(0).get<std::size_t>(), rows.at(1).get<std::size_t>()};
    if (s.signal_slice.end < s.signal_slice.begin) throw std::out_of_range("rows end before begin");
    if (const json& f = doc.at("frame_ref"); !f.is_null()) s.frame_ref = fs::path(f.get<std::string>());
    s.link = doc.at("link").get<std::string>();
    out.manifest_path = doc.at("manifest").get<std::string>();
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, fmt::format("{}: bad scenario file: {}", source, e.what()));
  } catch (const std::out_of_range& e) {
    throw Error(Errc::kInvalidArgument, fmt::format("{}: bad scenario file: {}", source, e.what()));
  }
}

std::string scenario_file_name(const Scenario& scenario) {
  std::string stem;
  for (const char c : scenario.log_id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    stem.push_back(safe ? c : '_');
  }
  const std::size_t hash = scenario.scenario_id.rfind('#');
  std::size_t index = 0;
  if (hash != std::string::npos) {
    const std::string_view tail = std::string_view(scenario.scenario_id).substr(hash + 1);
    std::from_chars(tail.data(), tail.data() + tail.size(), index);
  }
  return fmt::format("{}_{:05}.json", stem, index);
}

}  // namespace genius
