#include "genius/demo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "genius/csv.hpp"
#include "genius/error.hpp"
#include "genius/ingest.hpp"

namespace genius::demo {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kEpochBase = 1683187200.0;  // 2023-05-04T08:00:00Z
constexpr std::size_t kWindow = 30;

const std::string kSpeed =
    "zen_qm_feature_a/zen_qm_feature_a_vehicle_motion_state_data/data/longitudinal_velocity/velocity/"
    "meters_per_second/value";
const std::string kLat = "zen_qm_mapengine/satellite_data/data/latposn/nanodegrees/value";
const std::string kLon = "zen_qm_mapengine/satellite_data/data/longposn/nanodegrees/value";
const std::string kLkaSide = "zen_qm_feature_a/lss_diagnostics/data/lka/intervention_info/side";
const std::string kLkaEnabled = "zen_qm_feature_a/lss_diagnostics/data/lka/status/enable/status/left/unitless/value";
const std::string kLkaEmergency =
    "zen_qm_feature_a/lss_diagnostics/data/lka/status/enable/status_emergency/left/unitless/value";

// Portable draws: std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(Errc::kIoFailure, fmt::format("write failed: {}", path.string()));
}

// Word count cycles with the window index so every category has the same mix of description lengths.
std::string camera_text(const Category& cat, std::size_t window, Rng& rng) {
  std::vector<std::string> words = cat.vocabulary;
  const std::size_t count = 2 + window % (words.size() - 1);
  for (std::size_t i = 0; i < count; ++i) std::swap(words[i], words[i + rng.below(words.size() - i)]);
  std::string text = "road scene with " + words[0];
  for (std::size_t i = 1; i + 1 < count; ++i) text += ", " + words[i];
  return text + " and " + words[count - 1];
}

}  // namespace

// Flag words, camera words, absent-query words and the numerals the rules can emit
// (0-9, 12-20) occupy pairwise disjoint buckets of the default hash embedder, so a
// description's norm depends only on its word count.
const std::vector<Category>& categories() {
  static const std::vector<Category> kCategories = {
      {"drive_tunnel", "zen_qm_perception/environment/tunnel/inside/unitless/value", "inside tunnel",
       {"entrance", "concrete", "lamps", "dim", "portal", "arch"}, "tunnel entrance"},
      {"drive_snow", "zen_qm_perception/road_surface/snow/detected/unitless/value", "snowy highway surface",
       {"sweden", "slush", "snowbanks", "white", "winter", "frozen"}, "snowy highway in sweden"},
      {"drive_bridge", "zen_qm_mapengine/road_attributes/bridge/below/unitless/value", "passing below bridge",
       {"overpass", "shadow", "girders", "viaduct", "span", "beams"}, "driving under bridge"},
      {"drive_accident", "zen_qm_perception/hazard/accident/detected/unitless/value", "accident reported",
       {"debris", "ambulance", "wreck", "crumpled", "towing", "flares"}, "car accident"},
      {"drive_lane_change", "zen_qm_feature_a/lane_change/active/unitless/value", "changed lane",
       {"merge", "overtaking", "markings", "blinker", "adjacent", "mirror"}, "car changed lane"},
      {"drive_roundabout", "zen_qm_mapengine/road_attributes/roundabout/inside/unitless/value",
       "roundabout navigation", {"exit", "circular", "yield", "circle", "curve", "central"}, "roundabout exit"},
      {"drive_rain", "zen_qm_perception/weather/rain/detected/unitless/value", "rain falling",
       {"wet", "asphalt", "wipers", "spray", "glossy", "raindrops"}, "rain on wet asphalt"},
      {"drive_parking", "zen_qm_mapengine/road_attributes/parking/inside/unitless/value", "parking garage entry",
       {"ramp", "level", "ticket", "painted", "cars", "multistorey"}, "parking garage"},
  };
  return kCategories;
}

const std::vector<std::string>& absent_queries() {
  static const std::vector<std::string> kAbsent = {"road scene with volcano eruption",
                                                   "road scene with camel caravan"};
  return kAbsent;
}

const std::vector<std::string>& reference_queries() {
  static const std::vector<std::string> kReference = {"Snowy highway in Sweden", "Driving under bridge", "Car accident",
                                                  "Car changed lane"};
  return kReference;
}

Layout write_corpus(const fs::path& root, std::uint64_t seed) {
  Layout layout;
  layout.root = root;
  layout.frames_dir = root / "frames";
  const fs::path logs_dir = root / "logs";
  fs::create_directories(logs_dir);
  fs::create_directories(layout.frames_dir);

  Rng rng(seed);
  const auto& cats = categories();
  ordered_json vision = ordered_json::object();
  ordered_json truth = ordered_json::array();

  for (std::size_t c = 0; c < cats.size(); ++c) {
    const Category& cat = cats[c];
    const double t0 = kEpochBase + 3600.0 * static_cast<double>(c);

    std::vector<std::string> header = {"timestamp", csv::escape(kSpeed),      csv::escape(kLat),
                                       csv::escape(kLon), csv::escape(kLkaSide), csv::escape(kLkaEnabled),
                                       csv::escape(kLkaEmergency)};
    for (const Category& other : cats) header.push_back(csv::escape(other.flag_signal));
    std::string table = csv::join_row(header);

    double lat = 57.60 + 0.05 * static_cast<double>(c);
    double lon = 11.90 + 0.03 * static_cast<double>(c);
    ordered_json correct_ids = ordered_json::array();

    for (std::size_t w = 0; w < kLogSeconds / kWindow; ++w) {
      const double base_speed = 13.0 + 6.0 * rng.uniform();
      const double on_share = 0.6 + 0.4 * rng.uniform();
      const bool lka_event = cat.log_id == "drive_lane_change";
      const std::size_t lka_row = 5 + rng.below(20);
      for (std::size_t r = 0; r < kWindow; ++r) {
        const std::size_t row = w * kWindow + r;
        const double speed = std::round((base_speed + 2.0 * (rng.uniform() - 0.5)) * 10.0) / 10.0;
        lat += 0.00002 + 0.00001 * rng.uniform();
        lon += 0.00003 + 0.00001 * rng.uniform();
        const bool lka_on = lka_event && r >= lka_row && r < lka_row + 3;
        std::vector<std::string> cells = {
            fmt::format("{:.1f}", t0 + static_cast<double>(row)),
            fmt::format("{:.1f}", speed),
            fmt::format("{}", static_cast<std::int64_t>(std::llround(lat * 1e9))),
            fmt::format("{}", static_cast<std::int64_t>(std::llround(lon * 1e9))),
            lka_on ? "1" : "0",
            "1",
            "1",
        };
        for (std::size_t k = 0; k < cats.size(); ++k) {
          const bool on = k == c && static_cast<double>(r) < on_share * static_cast<double>(kWindow);
          cells.push_back(on ? "1" : "0");
        }
        table += csv::join_row(cells);
      }
      const std::string id = make_scenario_id(cat.log_id, w);
      vision[id] = camera_text(cat, w, rng);
      correct_ids.push_back(id);
      write_text(layout.frames_dir / (id + ".jpg"), "placeholder frame " + id + "\n");
    }

    const fs::path csv_path = logs_dir / (cat.log_id + ".csv");
    write_text(csv_path, table);
    ordered_json manifest;
    manifest["vehicle"] = fmt::format("V{:03}", 100 + c % 3);
    manifest["log_id"] = cat.log_id;
    manifest["utc_start"] = fmt::format("2023-05-04T{:02}:00:00Z", 8 + c);
    manifest["utc_end"] = fmt::format("2023-05-04T{:02}:05:00Z", 8 + c);
    manifest["signals_file"] = csv_path.filename().string();
    manifest["frames_dir"] = "../frames";
    manifest["link_template"] = "https://viz.example.internal/scenario/{scenario_id}";
    const fs::path manifest_path = logs_dir / (cat.log_id + ".manifest.json");
    write_text(manifest_path, manifest.dump(2) + "\n");
    layout.manifests.push_back(manifest_path);

    truth.push_back({{"query", cat.query}, {"correct_ids", correct_ids}});
  }
  for (const std::string& q : absent_queries()) truth.push_back({{"query", q}, {"correct_ids", ordered_json::array()}});

  ordered_json rules = ordered_json::array();
  rules.push_back({{"rule_id", "speed"},
                   {"kind", "numeric_summary"},
                   {"signal", kSpeed},
                   {"template", "peak speed {max} m/s"}});
  rules.push_back({{"rule_id", "lka_left_emergency"},
                   {"kind", "rising_edge"},
                   {"signal", kLkaSide},
                   {"params", {{"guards", {kLkaEnabled, kLkaEmergency}}}},
                   {"template", "left emergency lka intervention"}});
  for (const Category& cat : cats) {
    rules.push_back({{"rule_id", cat.log_id.substr(6)},
                     {"kind", "boolean_condition"},
                     {"signal", cat.flag_signal},
                     {"params", {{"min_fraction", 0.5}}},
                     {"template", cat.flag_template}});
  }

  ordered_json queries = ordered_json::array();
  for (const Category& cat : cats) queries.push_back({{"query", cat.query}, {"group", "correct"}});
  for (const std::string& q : absent_queries()) queries.push_back({{"query", q}, {"group", "incorrect"}});
  for (const std::string& q : reference_queries()) queries.push_back({{"query", q}, {"group", "test"}});

  layout.rules = root / "rules.json";
  layout.vision_stub = root / "vision.json";
  layout.queries = root / "queries.json";
  layout.truth = root / "truth.json";
  write_text(layout.rules, rules.dump(2) + "\n");
  write_text(layout.vision_stub, vision.dump(2) + "\n");
  write_text(layout.queries, queries.dump(2) + "\n");
  write_text(layout.truth, truth.dump(2) + "\n");
  return layout;
}

}  // namespace genius::demo
