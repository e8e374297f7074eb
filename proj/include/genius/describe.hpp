#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genius/http_client.hpp"
#include "genius/ingest.hpp"

namespace genius {

enum class RuleKind { kNumericSummary, kGeoPosition, kRisingEdge, kBooleanCondition };

std::string_view rule_kind_name(RuleKind kind);

// Placeholders a rule kind renders:
//   numeric_summary    {min} {mean} {max}
//   geo_position       {degrees}   (nanodegrees / 1e9 at the slice midpoint)
//   rising_edge        {count}     (0 -> 1 transitions with all guards at 1)
//   boolean_condition  {percent}   (share of rows where the signal is 1)
std::span<const std::string_view> rule_placeholders(RuleKind kind);

struct SignalRule {
  std::string rule_id;
  RuleKind kind = RuleKind::kNumericSummary;
  std::string signal;
  std::vector<std::string> guards;  // rising_edge only
  double min_fraction = 0.5;        // boolean_condition only
  std::string template_text;

  bool operator==(const SignalRule&) const = default;
};

// Rule set file: a JSON array of {"rule_id", "kind", "signal", "template",
// "params"?}. Raises MalformedRules naming the offending entry.
std::vector<SignalRule> parse_rules(std::string_view json_text, std::string_view source = "<rules>");
std::vector<SignalRule> load_rules(const std::filesystem::path& path);

// Fixed point, at most 9 fractional digits, trailing zeros trimmed but one
// fractional digit always kept: 15 -> "15.0", 57.1234567890 -> "57.123456789".
std::string format_number(double value);

std::size_t count_rising_edges(std::span<const double> signal, std::span<const std::span<const double>> guards);

struct SignalText {
  std::string text;
  std::vector<std::string> warnings;  // skipped rules
};

SignalText describe_signals(const Scenario& scenario, const SignalLog& log, std::span<const SignalRule> rules);

class VisionDescriber {
 public:
  virtual ~VisionDescriber() = default;
  virtual std::string describe(const std::filesystem::path& frame) = 0;
};

// Canned replies keyed by frame file stem (the scenario id).
class StubVisionDescriber : public VisionDescriber {
 public:
  explicit StubVisionDescriber(std::map<std::string, std::string> canned) : canned_(std::move(canned)) {}
  static StubVisionDescriber from_file(const std::filesystem::path& path);

  std::string describe(const std::filesystem::path& frame) override;

 private:
  std::map<std::string, std::string> canned_;
};

inline constexpr std::string_view kDefaultVisionPrompt =
    "Describe the driving scene in this camera image in one sentence.";

// POST {endpoint}/describe {"image_b64", "prompt"} -> {"text"}.
class HttpVisionDescriber : public VisionDescriber {
 public:
  HttpVisionDescriber(std::string endpoint, std::string prompt = std::string(kDefaultVisionPrompt),
                      http::Options options = {});

  std::string describe(const std::filesystem::path& frame) override;

 private:
  std::string endpoint_;
  std::string prompt_;
  http::Options options_;
};

std::string describe_frame(const std::optional<std::filesystem::path>& frame_ref, VisionDescriber& describer);

class TextCombiner {
 public:
  virtual ~TextCombiner() = default;
  virtual std::string combine(std::string_view signal_text, std::string_view vision_text) = 0;
};

// "Signals: {signal_text} Camera: {vision_text}", dropping an empty part and its label.
class TemplateCombiner : public TextCombiner {
 public:
  std::string combine(std::string_view signal_text, std::string_view vision_text) override;
};

inline constexpr std::string_view kDefaultCombinerPrompt =
    "Write one concise description of this driving scenario.\nSignals: {signal_text}\nCamera: {vision_text}";

// POST {endpoint}/generate {"prompt"} -> {"text"}; the prompt is a template with
// {signal_text} and {vision_text} placeholders.
class HttpTextCombiner : public TextCombiner {
 public:
  HttpTextCombiner(std::string endpoint, std::string prompt_template = std::string(kDefaultCombinerPrompt),
                   http::Options options = {});

  std::string combine(std::string_view signal_text, std::string_view vision_text) override;

 private:
  std::string endpoint_;
  std::string prompt_template_;
  http::Options options_;
};

std::string combine(std::string_view signal_text, std::string_view vision_text, TextCombiner& combiner);

struct ScenarioDescription {
  std::string scenario_id;
  std::string signal_text;
  std::string vision_text;
  std::string combined_text;

  bool operator==(const ScenarioDescription&) const = default;
};

std::string trim(std::string_view text);

}  // namespace genius
