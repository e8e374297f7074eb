#include "genius/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "genius/csv.hpp"
#include "genius/error.hpp"

namespace genius {
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Accumulates offsets from the first value, so equal inputs give that value exactly.
double mean(std::span<const double> xs) {
  double sum = 0.0;
  for (const double x : xs) sum += x - xs.front();
  return xs.front() + sum / static_cast<double>(xs.size());
}

double population_sd(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double sample_sd(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Drops one largest and one smallest value from pools of three or more.
std::vector<double> trimmed(std::vector<double> xs) {
  if (xs.size() < 3) return xs;
  std::sort(xs.begin(), xs.end());
  return {xs.begin() + 1, xs.end() - 1};
}

struct Pools {
  std::vector<double> correct;
  std::vector<double> incorrect;
  std::vector<std::vector<double>> correct_by_category;
};

Pools collect(std::span<const CategoryRuns> runs) {
  if (runs.empty()) throw Error(Errc::kEmptyInput, "no categories");
  Pools pools;
  for (const CategoryRuns& cat : runs) {
    if (cat.iterations.size() < 2) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("category \"{}\" has {} iteration(s), need at least 2", cat.category,
                              cat.iterations.size()));
    }
    std::vector<double> own;
    for (const IterationDistances& it : cat.iterations) {
      own.insert(own.end(), it.correct.begin(), it.correct.end());
      pools.incorrect.insert(pools.incorrect.end(), it.incorrect.begin(), it.incorrect.end());
    }
    if (own.empty()) throw Error(Errc::kMissingLabels, fmt::format("category \"{}\" has no correct distances", cat.category));
    pools.correct.insert(pools.correct.end(), own.begin(), own.end());
    pools.correct_by_category.push_back(std::move(own));
  }
  if (pools.incorrect.empty()) throw Error(Errc::kMissingLabels, "no incorrect distances in any category");
  return pools;
}

ModelComparisonReport summarize(const Pools& pools) {
  double sd_sum = 0.0;
  for (const auto& cat : pools.correct_by_category) sd_sum += population_sd(cat);
  return comparison_from_summary(mean(pools.correct), mean(pools.incorrect),
                                 *std::max_element(pools.correct.begin(), pools.correct.end()),
                                 *std::min_element(pools.incorrect.begin(), pools.incorrect.end()),
                                 sd_sum / static_cast<double>(pools.correct_by_category.size()));
}

std::vector<double> number_array(const json& value, std::string_view where) {
  if (!value.is_array()) throw Error(Errc::kInvalidArgument, fmt::format("{}: expected an array of numbers", where));
  std::vector<double> out;
  for (const json& v : value) {
    if (!v.is_number()) throw Error(Errc::kInvalidArgument, fmt::format("{}: expected an array of numbers", where));
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string_view label_name(Label label) { return label == Label::kCorrect ? "correct" : "incorrect"; }

std::string_view verdict_name(Verdict verdict) {
  return verdict == Verdict::kAnswerLike ? "answer-like" : "no-answer-like";
}

DistanceProfile build_profile(const Collection& collection, std::string_view query, Embedder& embedder,
                              const std::set<std::string>* correct_ids) {
  if (collection.embedder_id() != embedder.id()) {
    throw Error(Errc::kEmbedderMismatch, fmt::format("collection {} was built with {}, query embedder is {}",
                                                     collection.name(), collection.embedder_id(), embedder.id()));
  }
  if (collection.empty()) throw Error(Errc::kEmptyCollection, fmt::format("collection {} is empty", collection.name()));
  const EmbeddingVector q = embed(query, embedder);
  DistanceProfile profile;
  profile.query = std::string(query);
  for (const Neighbor& hit : collection.query(q, collection.size())) {
    profile.distances.push_back(hit.distance);
    if (correct_ids != nullptr) {
      profile.labels.push_back(correct_ids->contains(collection.info(hit.index).id) ? Label::kCorrect
                                                                                   : Label::kIncorrect);
    }
  }
  return profile;
}

RetrievalReport retrieval_metrics(std::span<const double> distances) {
  if (distances.empty()) throw Error(Errc::kEmptyProfile, "no distances");
  std::vector<double> d(distances.begin(), distances.end());
  std::sort(d.begin(), d.end());

  double gap = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) gap = std::max(gap, d[i] - d[i - 1]);
  return report_from_summary(gap, d.front(), d.back(), population_sd(d));
}

RetrievalReport retrieval_metrics(const DistanceProfile& profile) {
  try {
    return retrieval_metrics(profile.distances);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("query \"{}\": {}", profile.query, e.detail()));
  }
}

RetrievalReport report_from_summary(double largest_gap, double min_distance, double max_distance, double std_dev) {
  RetrievalReport r;
  r.largest_gap = largest_gap;
  r.min_distance = min_distance;
  r.max_distance = max_distance;
  r.range = max_distance - min_distance;
  r.std_dev = std_dev;
  r.relative_largest_gap = r.range > 0.0 ? largest_gap / r.range : 0.0;
  return r;
}

double arlg(std::span<const RetrievalReport> reports) {
  if (reports.empty()) throw Error(Errc::kEmptyInput, "no reports to average");
  double sum = 0.0;
  for (const RetrievalReport& r : reports) sum += r.relative_largest_gap;
  return sum / static_cast<double>(reports.size());
}

double arlg(std::span<const DistanceProfile> profiles) {
  std::vector<RetrievalReport> reports;
  reports.reserve(profiles.size());
  for (const DistanceProfile& p : profiles) reports.push_back(retrieval_metrics(p));
  return arlg(reports);
}

double arlg_baseline(double correct_arlg, double incorrect_arlg) { return (correct_arlg + incorrect_arlg) / 2.0; }

Verdict arlg_classify(double test_arlg, double correct_arlg, double incorrect_arlg) {
  return test_arlg > arlg_baseline(correct_arlg, incorrect_arlg) ? Verdict::kAnswerLike : Verdict::kNoAnswerLike;
}

double closest_z_score(std::span<const double> distances) {
  if (distances.size() < 3) {
    throw Error(Errc::kInvalidArgument, fmt::format("z-score needs at least 3 distances, got {}", distances.size()));
  }
  std::vector<double> d(distances.begin(), distances.end());
  std::sort(d.begin(), d.end());
  const std::span<const double> rest = std::span<const double>(d).subspan(1);
  const double sd = sample_sd(rest);
  if (rest.front() == rest.back() || !(sd > 0.0)) throw Error(Errc::kDegenerateProfile, "all distances after the closest are equal");
  return (d.front() - mean(rest)) / sd;
}

bool z_score_validate(const DistanceProfile& profile, double threshold) {
  try {
    return closest_z_score(profile.distances) <= threshold;
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("query \"{}\": {}", profile.query, e.detail()));
  }
}

ModelComparisonReport model_comparison(std::span<const CategoryRuns> runs) { return summarize(collect(runs)); }

ModelComparisonReport model_comparison_excluding_outliers(std::span<const CategoryRuns> runs) {
  Pools pools = collect(runs);
  pools.correct = trimmed(std::move(pools.correct));
  pools.incorrect = trimmed(std::move(pools.incorrect));
  for (auto& cat : pools.correct_by_category) cat = trimmed(std::move(cat));
  return summarize(pools);
}

ModelComparisonReport comparison_from_summary(double mean_correct, double mean_incorrect, double highest_correct,
                                              double lowest_incorrect, double avg_std_dev) {
  ModelComparisonReport r;
  r.mean_dist_correct = mean_correct;
  r.mean_dist_incorrect = mean_incorrect;
  r.mean_distance_difference = mean_incorrect - mean_correct;
  r.highest_dist_correct = highest_correct;
  r.lowest_dist_incorrect = lowest_incorrect;
  r.smallest_distance_difference = lowest_incorrect - highest_correct;
  r.avg_std_dev_of_scenarios = avg_std_dev;
  return r;
}

std::vector<CategoryRuns> parse_runs(std::string_view json_text, std::string_view source) {
  const json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("categories") || !doc["categories"].is_array()) {
    throw Error(Errc::kInvalidArgument, fmt::format("{}: expected {{\"categories\": [...]}}", source));
  }
  std::vector<CategoryRuns> out;
  for (std::size_t c = 0; c < doc["categories"].size(); ++c) {
    const json& cat = doc["categories"][c];
    if (!cat.is_object() || !cat.contains("iterations") || !cat["iterations"].is_array()) {
      throw Error(Errc::kInvalidArgument, fmt::format("{}: categories[{}] lacks \"iterations\"", source, c));
    }
    CategoryRuns runs;
    runs.category = cat.value("category", fmt::format("category_{}", c));
    for (std::size_t i = 0; i < cat["iterations"].size(); ++i) {
      const json& it = cat["iterations"][i];
      const std::string where = fmt::format("{}: categories[{}].iterations[{}]", source, c, i);
      if (!it.is_object()) throw Error(Errc::kInvalidArgument, where + ": expected an object");
      IterationDistances d;
      if (it.contains("correct")) d.correct = number_array(it["correct"], where + ".correct");
      if (it.contains("incorrect")) d.incorrect = number_array(it["incorrect"], where + ".incorrect");
      runs.iterations.push_back(std::move(d));
    }
    out.push_back(std::move(runs));
  }
  return out;
}

std::string distance_curves_csv(std::span<const DistanceProfile> profiles) {
  std::string out = "query,rank,distance,label\n";
  for (const DistanceProfile& p : profiles) {
    std::vector<double> d = p.distances;
    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&d](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    const std::string query = csv::escape(p.query);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const std::size_t i = order[rank];
      const std::string_view label = p.labels.empty() ? std::string_view() : label_name(p.labels.at(i));
      out += fmt::format("{},{},{:.17g},{}\n", query, rank + 1, d[i], label);
    }
  }
  return out;
}

std::vector<GroundTruth> parse_truth(std::string_view json_text, std::string_view source) {
  const json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(Errc::kInvalidArgument, fmt::format("{}: expected a JSON array", source));
  }
  std::vector<GroundTruth> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(GroundTruth{doc[i].at("query").get<std::string>(),
                                doc[i].at("correct_ids").get<std::vector<std::string>>()});
    } catch (const json::exception& e) {
      throw Error(Errc::kInvalidArgument, fmt::format("{}: entry {}: {}", source, i, e.what()));
    }
  }
  return out;
}

void check_truth(std::span<const GroundTruth> truth, const Collection& collection) {
  for (const GroundTruth& t : truth) {
    for (const std::string& id : t.correct_ids) {
      if (collection.find(id) == Collection::npos) {
        throw Error(Errc::kUnknownId, fmt::format("query \"{}\": scenario {} is not in collection {}", t.query, id,
                                                  collection.name()));
      }
    }
  }
}

ordered_json to_json(const RetrievalReport& r) {
  ordered_json j;
  j["largest_gap"] = r.largest_gap;
  j["min_distance"] = r.min_distance;
  j["max_distance"] = r.max_distance;
  j["range"] = r.range;
  j["std_dev"] = r.std_dev;
  j["relative_largest_gap"] = r.relative_largest_gap;
  return j;
}

ordered_json to_json(const ModelComparisonReport& r) {
  ordered_json j;
  j["mean_dist_correct"] = r.mean_dist_correct;
  j["mean_dist_incorrect"] = r.mean_dist_incorrect;
  j["mean_distance_difference"] = r.mean_distance_difference;
  j["highest_dist_correct"] = r.highest_dist_correct;
  j["lowest_dist_incorrect"] = r.lowest_dist_incorrect;
  j["smallest_distance_difference"] = r.smallest_distance_difference;
  j["avg_std_dev_of_scenarios"] = r.avg_std_dev_of_scenarios;
  return j;
}

}  // namespace genius
