#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "genius/embed.hpp"
#include "genius/store.hpp"

namespace genius {

enum class Label { kCorrect, kIncorrect };

std::string_view label_name(Label label);

// All distances of one query against the whole collection, ascending.
struct DistanceProfile {
  std::string query;
  std::vector<double> distances;
  std::vector<Label> labels;  // empty, or one per distance

  bool operator==(const DistanceProfile&) const = default;
};

// Runs the query with n = collection size. When correct_ids is given every
// distance is labelled.
DistanceProfile build_profile(const Collection& collection, std::string_view query, Embedder& embedder,
                              const std::set<std::string>* correct_ids = nullptr);

struct RetrievalReport {
  double largest_gap = 0.0;
  double min_distance = 0.0;
  double max_distance = 0.0;
  double range = 0.0;
  double std_dev = 0.0;               // population
  double relative_largest_gap = 0.0;  // largest_gap / range, 0 for a flat profile

  bool operator==(const RetrievalReport&) const = default;
};

// Sorts internally, so the input order does not matter. Throws EmptyProfile.
RetrievalReport retrieval_metrics(std::span<const double> distances);
RetrievalReport retrieval_metrics(const DistanceProfile& profile);

// Builds a report from the three figures a results table publishes; range and
// relative gap follow from the report identities.
RetrievalReport report_from_summary(double largest_gap, double min_distance, double max_distance, double std_dev = 0.0);

// Mean relative largest gap. Throws EmptyInput.
double arlg(std::span<const RetrievalReport> reports);
double arlg(std::span<const DistanceProfile> profiles);

enum class Verdict { kAnswerLike, kNoAnswerLike };

std::string_view verdict_name(Verdict verdict);

double arlg_baseline(double correct_arlg, double incorrect_arlg);
// Answer-like iff test_arlg is strictly above the midpoint of the two baselines.
Verdict arlg_classify(double test_arlg, double correct_arlg, double incorrect_arlg);

inline constexpr double kDefaultZThreshold = -2.0;

// z of the closest distance against the rest: (d[0] - mean(rest)) / sd(rest),
// sd with the n-1 denominator. Needs at least 3 distances; throws
// DegenerateProfile when the rest are all equal.
double closest_z_score(std::span<const double> distances);
bool z_score_validate(const DistanceProfile& profile, double threshold = kDefaultZThreshold);

struct IterationDistances {
  std::vector<double> correct;
  std::vector<double> incorrect;
};

struct CategoryRuns {
  std::string category;
  std::vector<IterationDistances> iterations;
};

struct ModelComparisonReport {
  double mean_dist_correct = 0.0;
  double mean_dist_incorrect = 0.0;
  double mean_distance_difference = 0.0;
  double highest_dist_correct = 0.0;
  double lowest_dist_incorrect = 0.0;
  double smallest_distance_difference = 0.0;
  double avg_std_dev_of_scenarios = 0.0;

  bool operator==(const ModelComparisonReport&) const = default;
};

// Pools labelled distances over categories and iterations. Needs >= 1
// category with >= 2 iterations; throws MissingLabels when a category has no
// correct distances or no incorrect distance exists at all.
ModelComparisonReport model_comparison(std::span<const CategoryRuns> runs);

// Same metrics with outliers excluded: every pool of three or more values
// loses its single largest and single smallest value.
ModelComparisonReport model_comparison_excluding_outliers(std::span<const CategoryRuns> runs);

// Builds the report from summary means and extremes.
ModelComparisonReport comparison_from_summary(double mean_correct, double mean_incorrect, double highest_correct,
                                              double lowest_incorrect, double avg_std_dev = 0.0);

// Runs file: {"categories": [{"category", "iterations": [{"correct": [...],
// "incorrect": [...]}]}]}.
std::vector<CategoryRuns> parse_runs(std::string_view json_text, std::string_view source = "<runs>");

// CSV "query,rank,distance,label", ranks from 1.
std::string distance_curves_csv(std::span<const DistanceProfile> profiles);

struct GroundTruth {
  std::string query;
  std::vector<std::string> correct_ids;
};

// JSON array of {"query", "correct_ids"}.
std::vector<GroundTruth> parse_truth(std::string_view json_text, std::string_view source = "<truth>");
// Throws UnknownId naming the first id absent from the collection.
void check_truth(std::span<const GroundTruth> truth, const Collection& collection);

nlohmann::ordered_json to_json(const RetrievalReport& report);
nlohmann::ordered_json to_json(const ModelComparisonReport& report);

}  // namespace genius
