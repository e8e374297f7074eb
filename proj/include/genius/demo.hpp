#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace genius::demo {

inline constexpr std::size_t kLogCount = 8;
inline constexpr std::size_t kLogSeconds = 300;
inline constexpr std::uint64_t kDefaultSeed = 20240504;

// One scenario category; every window of its log shows it. Vocabularies are
// disjoint between categories.
struct Category {
  std::string log_id;
  std::string flag_signal;
  std::string flag_template;  // boolean_condition template
  std::vector<std::string> vocabulary;
  std::string query;  // a query whose answers are exactly this category
};

const std::vector<Category>& categories();

// Queries whose words occur in no category.
const std::vector<std::string>& absent_queries();

// Four reference query texts: snowy highway, bridge, accident, lane change.
const std::vector<std::string>& reference_queries();

struct Layout {
  std::filesystem::path root;
  std::vector<std::filesystem::path> manifests;
  std::filesystem::path frames_dir;
  std::filesystem::path rules;
  std::filesystem::path vision_stub;
  std::filesystem::path queries;
  std::filesystem::path truth;
};

// Writes 8 logs x 300 s of 1 Hz signals with manifests, placeholder frames,
// a rule set, canned camera descriptions, a queries file and ground truth.
// Output bytes depend only on the seed.
Layout write_corpus(const std::filesystem::path& root, std::uint64_t seed = kDefaultSeed);

}  // namespace genius::demo
