#include "genius/retrieve.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "genius/error.hpp"

namespace genius {
using nlohmann::ordered_json;

QueryResult search(const Collection& collection, std::string_view query_text, std::size_t n, Embedder& embedder) {
  if (n == 0) throw Error(Errc::kInvalidArgument, "result count must be positive");
  if (collection.embedder_id() != embedder.id()) {
    throw Error(Errc::kEmbedderMismatch, fmt::format("collection {} was built with {}, query embedder is {}",
                                                     collection.name(), collection.embedder_id(), embedder.id()));
  }
  if (collection.empty()) throw Error(Errc::kEmptyCollection, fmt::format("collection {} is empty", collection.name()));

  const EmbeddingVector q = embed(query_text, embedder);
  QueryResult out;
  out.query = std::string(query_text);
  for (const Neighbor& hit : collection.query(q, n)) {
    const RecordInfo& info = collection.info(hit.index);
    out.results.push_back(ResultEntry{info.id, hit.distance, info.description, info.metadata});
  }
  return out;
}

std::string to_json(const QueryResult& result, int indent) {
  ordered_json doc;
  doc["query"] = result.query;
  doc["results"] = ordered_json::array();
  for (const ResultEntry& r : result.results) {
    ordered_json entry;
    entry["id"] = r.id;
    entry["distance"] = r.distance;
    entry["description"] = r.description;
    entry["metadata"] = {{"vehicle", r.metadata.vehicle},
                         {"log_id", r.metadata.log_id},
                         {"window_start", r.metadata.window_start},
                         {"link", r.metadata.link}};
    doc["results"].push_back(std::move(entry));
  }
  return doc.dump(indent, ' ', false, ordered_json::error_handler_t::replace);
}

QueryResult parse_query_result(std::string_view json_text) {
  try {
    const ordered_json doc = ordered_json::parse(json_text);
    QueryResult out;
    out.query = doc.at("query").get<std::string>();
    for (const ordered_json& r : doc.at("results")) {
      const ordered_json& m = r.at("metadata");
      out.results.push_back(ResultEntry{
          r.at("id").get<std::string>(), r.at("distance").get<double>(), r.at("description").get<std::string>(),
          RecordMetadata{m.at("vehicle").get<std::string>(), m.at("log_id").get<std::string>(),
                         m.at("window_start").get<double>(), m.at("link").get<std::string>()}});
    }
    return out;
  } catch (const ordered_json::exception& e) {
    throw Error(Errc::kInvalidArgument, fmt::format("bad query result document: {}", e.what()));
  }
}

std::string format_table(const QueryResult& result, std::size_t description_width) {
  std::size_t id_width = 2;
  for (const ResultEntry& r : result.results) id_width = std::max(id_width, r.id.size());

  std::string out = fmt::format("{:>4}  {:<{}}  {:>8}  {}\n", "rank", "id", id_width, "distance", "description");
  for (std::size_t i = 0; i < result.results.size(); ++i) {
    const ResultEntry& r = result.results[i];
    std::string desc = r.description;
    if (desc.size() > description_width) desc = desc.substr(0, description_width - 3) + "...";
    out += fmt::format("{:>4}  {:<{}}  {:>8.4f}  {}\n", i + 1, r.id, id_width, r.distance, desc);
  }
  return out;
}

}  // namespace genius
