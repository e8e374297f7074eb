#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "genius/embed.hpp"
#include "genius/store.hpp"

namespace genius {

inline constexpr std::size_t kDefaultResultCount = 10;

struct ResultEntry {
  std::string id;
  double distance = 0.0;
  std::string description;
  RecordMetadata metadata;

  bool operator==(const ResultEntry&) const = default;
};

struct QueryResult {
  std::string query;
  std::vector<ResultEntry> results;  // ascending distance

  bool operator==(const QueryResult&) const = default;
};

// Embeds query_text with the collection's embedder and returns the n nearest
// records. Throws NoTokens, EmbedderMismatch, EmptyCollection.
QueryResult search(const Collection& collection, std::string_view query_text, std::size_t n, Embedder& embedder);

// Result document: {"query", "results": [{"id", "distance", "description",
// "metadata": {"vehicle", "log_id", "window_start", "link"}}]}.
std::string to_json(const QueryResult& result, int indent = -1);
QueryResult parse_query_result(std::string_view json_text);

// Aligned table: rank, id, distance (4 decimals), description prefix.
std::string format_table(const QueryResult& result, std::size_t description_width = 60);

}  // namespace genius
