#include "genius/describe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "genius/error.hpp"

namespace genius {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kSummaryKeys = {"min", "mean", "max"};
constexpr std::array<std::string_view, 1> kGeoKeys = {"degrees"};
constexpr std::array<std::string_view, 1> kEdgeKeys = {"count"};
constexpr std::array<std::string_view, 1> kConditionKeys = {"percent"};

constexpr double kNanodegreesPerDegree = 1e9;

[[noreturn]] void bad_rule(std::string_view source, std::size_t index, const std::string& what) {
  throw Error(Errc::kMalformedRules, fmt::format("{}: rule[{}]: {}", source, index, what));
}

// Names inside "{...}" in a template, in order of appearance.
std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    const std::size_t close = text.find('}', pos);
    if (close == std::string_view::npos) break;
    out.emplace_back(text.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return out;
}

std::string render(std::string_view text, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find('}', open);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const auto it = values.find(text.substr(open + 1, close - open - 1));
    if (it != values.end()) {
      out.append(it->second);
    } else {
      out.append(text.substr(open, close - open + 1));
    }
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

std::string render_pair(std::string_view text, std::string_view signal_text, std::string_view vision_text) {
  return render(text, {{"signal_text", std::string(signal_text)}, {"vision_text", std::string(vision_text)}});
}

RuleKind parse_kind(std::string_view name, std::string_view source, std::size_t index) {
  if (name == "numeric_summary") return RuleKind::kNumericSummary;
  if (name == "geo_position") return RuleKind::kGeoPosition;
  if (name == "rising_edge") return RuleKind::kRisingEdge;
  if (name == "boolean_condition") return RuleKind::kBooleanCondition;
  bad_rule(source, index, fmt::format("unknown kind \"{}\"", name));
}

std::string text_field(const json& obj, const char* key, std::string_view source, std::size_t index) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) bad_rule(source, index, fmt::format("\"{}\" must be a string", key));
  return it->get<std::string>();
}

}  // namespace

std::string_view rule_kind_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::kNumericSummary: return "numeric_summary";
    case RuleKind::kGeoPosition: return "geo_position";
    case RuleKind::kRisingEdge: return "rising_edge";
    case RuleKind::kBooleanCondition: return "boolean_condition";
  }
  return "unknown";
}

std::span<const std::string_view> rule_placeholders(RuleKind kind) {
  switch (kind) {
    case RuleKind::kNumericSummary: return kSummaryKeys;
    case RuleKind::kGeoPosition: return kGeoKeys;
    case RuleKind::kRisingEdge: return kEdgeKeys;
    case RuleKind::kBooleanCondition: return kConditionKeys;
  }
  return {};
}

std::vector<SignalRule> parse_rules(std::string_view json_text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kMalformedRules, fmt::format("{}: {}", source, e.what()));
  }
  if (!doc.is_array()) throw Error(Errc::kMalformedRules, fmt::format("{}: expected a JSON array", source));

  std::vector<SignalRule> rules;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    if (!entry.is_object()) bad_rule(source, i, "expected an object");
    for (const auto& [key, _] : entry.items()) {
      if (key != "rule_id" && key != "kind" && key != "signal" && key != "template" && key != "params") {
        bad_rule(source, i, fmt::format("unknown key \"{}\"", key));
      }
    }
    SignalRule rule;
    rule.rule_id = text_field(entry, "rule_id", source, i);
    if (rule.rule_id.empty()) bad_rule(source, i, "empty rule_id");
    if (!ids.insert(rule.rule_id).second) bad_rule(source, i, fmt::format("duplicate rule_id \"{}\"", rule.rule_id));
    rule.kind = parse_kind(text_field(entry, "kind", source, i), source, i);
    rule.signal = text_field(entry, "signal", source, i);
    rule.template_text = text_field(entry, "template", source, i);

    const json params = entry.value("params", json::object());
    if (!params.is_object()) bad_rule(source, i, "\"params\" must be an object");
    for (const auto& [key, value] : params.items()) {
      if (rule.kind == RuleKind::kRisingEdge && key == "guards") {
        if (!value.is_array()) bad_rule(source, i, "\"guards\" must be an array of signal names");
        for (const json& g : value) {
          if (!g.is_string()) bad_rule(source, i, "\"guards\" must be an array of signal names");
          rule.guards.push_back(g.get<std::string>());
        }
      } else if (rule.kind == RuleKind::kBooleanCondition && key == "min_fraction") {
        if (!value.is_number()) bad_rule(source, i, "\"min_fraction\" must be a number");
        rule.min_fraction = value.get<double>();
        if (!(rule.min_fraction > 0.0 && rule.min_fraction <= 1.0)) {
          bad_rule(source, i, "\"min_fraction\" must lie in (0, 1]");
        }
      } else {
        bad_rule(source, i, fmt::format("parameter \"{}\" does not apply to {}", key, rule_kind_name(rule.kind)));
      }
    }

    const auto allowed = rule_placeholders(rule.kind);
    for (const std::string& name : placeholders_in(rule.template_text)) {
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
        bad_rule(source, i, fmt::format("placeholder {{{}}} is not produced by {}", name, rule_kind_name(rule.kind)));
      }
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<SignalRule> load_rules(const fs::path& path) { return parse_rules(read_file(path), path.string()); }

std::string format_number(double value) {
  std::string s = fmt::format("{:.9f}", value);
  const std::size_t dot = s.find('.');
  if (dot != std::string::npos) {
    std::size_t last = s.find_last_not_of('0');
    if (last == dot) ++last;  // keep one fractional digit
    s.erase(last + 1);
  }
  if (s == "-0.0") s = "0.0";
  return s;
}

std::size_t count_rising_edges(std::span<const double> signal, std::span<const std::span<const double>> guards) {
  std::size_t count = 0;
  for (std::size_t i = 1; i < signal.size(); ++i) {
    if (signal[i - 1] != 0.0 || signal[i] != 1.0) continue;
    const bool armed = std::all_of(guards.begin(), guards.end(), [i](std::span<const double> g) { return g[i] == 1.0; });
    if (armed) ++count;
  }
  return count;
}

SignalText describe_signals(const Scenario& scenario, const SignalLog& log, std::span<const SignalRule> rules) {
  SignalText out;
  std::vector<std::string> parts;
  const RowRange rows = scenario.signal_slice;

  auto slice_of = [&](std::span<const double> column) { return column.subspan(rows.begin, rows.size()); };

  for (const SignalRule& rule : rules) {
    const auto column = log.column(rule.signal);
    if (!column) {
      out.warnings.push_back(fmt::format("rule {}: signal \"{}\" not in log {}, skipped", rule.rule_id, rule.signal,
                                         log.manifest().log_id));
      continue;
    }
    if (rows.end > column->size() || rows.size() == 0) {
      out.warnings.push_back(fmt::format("rule {}: no rows in scenario {}, skipped", rule.rule_id,
                                         scenario.scenario_id));
      continue;
    }
    const std::span<const double> values = slice_of(*column);

    switch (rule.kind) {
      case RuleKind::kNumericSummary: {
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        double sum = 0.0;
        for (const double v : values) sum += v;
        const double mean = sum / static_cast<double>(values.size());
        parts.push_back(render(rule.template_text, {{"min", format_number(*lo)},
                                                    {"mean", format_number(mean)},
                                                    {"max", format_number(*hi)}}));
        break;
      }
      case RuleKind::kGeoPosition: {
        const double nanodegrees = values[values.size() / 2];
        parts.push_back(render(rule.template_text, {{"degrees", format_number(nanodegrees / kNanodegreesPerDegree)}}));
        break;
      }
      case RuleKind::kRisingEdge: {
        std::vector<std::span<const double>> guard_slices;
        bool missing_guard = false;
        for (const std::string& guard : rule.guards) {
          const auto g = log.column(guard);
          if (!g) {
            out.warnings.push_back(fmt::format("rule {}: guard signal \"{}\" not in log {}, skipped", rule.rule_id,
                                               guard, log.manifest().log_id));
            missing_guard = true;
            break;
          }
          guard_slices.push_back(slice_of(*g));
        }
        if (missing_guard) break;
        const std::size_t count = count_rising_edges(values, guard_slices);
        if (count > 0) parts.push_back(render(rule.template_text, {{"count", std::to_string(count)}}));
        break;
      }
      case RuleKind::kBooleanCondition: {
        const auto on = static_cast<double>(std::count(values.begin(), values.end(), 1.0));
        const double fraction = on / static_cast<double>(values.size());
        if (fraction >= rule.min_fraction) {
          const auto percent = static_cast<long>(std::lround(fraction * 100.0));
          parts.push_back(render(rule.template_text, {{"percent", std::to_string(percent)}}));
        }
        break;
      }
    }
  }

  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.text += "; ";
    out.text += parts[i];
  }
  return out;
}

std::string trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const std::size_t b = text.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const std::size_t e = text.find_last_not_of(kSpace);
  return std::string(text.substr(b, e - b + 1));
}

StubVisionDescriber StubVisionDescriber::from_file(const fs::path& path) {
  try {
    return StubVisionDescriber(json::parse(read_file(path)).get<std::map<std::string, std::string>>());
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, fmt::format("{}: expected a JSON object of strings: {}", path.string(),
                                                    e.what()));
  }
}

std::string StubVisionDescriber::describe(const fs::path& frame) {
  const auto it = canned_.find(frame.stem().string());
  return it == canned_.end() ? std::string() : it->second;
}

HttpVisionDescriber::HttpVisionDescriber(std::string endpoint, std::string prompt, http::Options options)
    : endpoint_(std::move(endpoint)), prompt_(std::move(prompt)), options_(options) {}

std::string HttpVisionDescriber::describe(const fs::path& frame) {
  const json request = {{"image_b64", http::base64_encode(read_file(frame))}, {"prompt", prompt_}};
  const auto reply = http::post_json(endpoint_, "/describe", request.dump(), options_);
  if (!reply) throw Error(Errc::kVisionServiceUnavailable, fmt::format("{} did not answer", endpoint_));
  if (reply->status != 200) {
    throw Error(Errc::kVisionServiceUnavailable, fmt::format("{}/describe returned HTTP {}", endpoint_, reply->status));
  }
  const json body = json::parse(reply->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw Error(Errc::kVisionServiceMalformedReply, fmt::format("{}/describe: reply lacks a \"text\" string", endpoint_));
  }
  return body["text"].get<std::string>();
}

std::string describe_frame(const std::optional<fs::path>& frame_ref, VisionDescriber& describer) {
  if (!frame_ref) return {};
  std::error_code ec;
  if (!fs::is_regular_file(*frame_ref, ec)) return {};
  return trim(describer.describe(*frame_ref));
}

std::string TemplateCombiner::combine(std::string_view signal_text, std::string_view vision_text) {
  std::string out;
  if (!signal_text.empty()) out = fmt::format("Signals: {}", signal_text);
  if (!vision_text.empty()) {
    if (!out.empty()) out.push_back(' ');
    out += fmt::format("Camera: {}", vision_text);
  }
  return out;
}

HttpTextCombiner::HttpTextCombiner(std::string endpoint, std::string prompt_template, http::Options options)
    : endpoint_(std::move(endpoint)), prompt_template_(std::move(prompt_template)), options_(options) {}

std::string HttpTextCombiner::combine(std::string_view signal_text, std::string_view vision_text) {
  const json request = {{"prompt", render_pair(prompt_template_, signal_text, vision_text)}};
  const auto reply = http::post_json(endpoint_, "/generate", request.dump(), options_);
  if (!reply) throw Error(Errc::kCombinerServiceUnavailable, fmt::format("{} did not answer", endpoint_));
  if (reply->status != 200) {
    throw Error(Errc::kCombinerServiceUnavailable,
                fmt::format("{}/generate returned HTTP {}", endpoint_, reply->status));
  }
  const json body = json::parse(reply->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw Error(Errc::kCombinerServiceUnavailable, fmt::format("{}/generate: reply lacks a \"text\" string", endpoint_));
  }
  return body["text"].get<std::string>();
}

std::string combine(std::string_view signal_text, std::string_view vision_text, TextCombiner& combiner) {
  if (signal_text.empty() && vision_text.empty()) {
    throw Error(Errc::kEmptyDescription, "both signal and camera text are empty");
  }
  std::string text = trim(combiner.combine(signal_text, vision_text));
  if (text.empty()) throw Error(Errc::kCombinerServiceUnavailable, "combiner produced empty text");
  return text;
}

}  // namespace genius
