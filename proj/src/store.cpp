#include "genius/store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "genius/error.hpp"
#include "genius/ingest.hpp"

namespace genius {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::string quote(std::string_view s) {
  return json(s).dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

[[noreturn]] void corrupt(std::string_view source, std::size_t line, const std::string& what) {
  throw Error(Errc::kCorruptStore, fmt::format("{}:{}: {}", source, line, what));
}

}  // namespace

Collection::Collection(std::string name, std::string embedder_id, std::size_t dim)
    : name_(std::move(name)), embedder_id_(std::move(embedder_id)), dim_(dim) {
  if (dim_ == 0) throw Error(Errc::kInvalidArgument, "collection dimension must be positive");
}

std::span<const double> Collection::vector(std::size_t index) const {
  if (index >= size()) throw Error(Errc::kUnknownId, fmt::format("record index {} out of range", index));
  return std::span<const double>(matrix_).subspan(index * dim_, dim_);
}

EmbeddedRecord Collection::record(std::size_t index) const {
  const auto v = vector(index);
  const RecordInfo& i = infos_[index];
  return EmbeddedRecord{i.id, EmbeddingVector::from_unit({v.begin(), v.end()}), i.description, i.metadata};
}

std::size_t Collection::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? npos : it->second;
}

void Collection::add(EmbeddedRecord record) {
  if (record.vector.dim() != dim_) {
    throw Error(Errc::kDimensionMismatch,
                fmt::format("record {} has dimension {}, collection {} expects {}", record.id, record.vector.dim(),
                            name_, dim_));
  }
  if (by_id_.contains(record.id)) throw Error(Errc::kDuplicateId, fmt::format("{} already in {}", record.id, name_));
  const auto v = record.vector.values();
  matrix_.insert(matrix_.end(), v.begin(), v.end());
  by_id_.emplace(record.id, infos_.size());
  infos_.push_back(RecordInfo{std::move(record.id), std::move(record.description), std::move(record.metadata)});
}

std::vector<Neighbor> Collection::query(const EmbeddingVector& q, std::size_t n) const {
  if (q.dim() != dim_) {
    throw Error(Errc::kDimensionMismatch, fmt::format("query has dimension {}, collection {} expects {}", q.dim(),
                                                      name_, dim_));
  }
  if (empty()) throw Error(Errc::kEmptyCollection, fmt::format("collection {} is empty", name_));

  const std::size_t count = size();
  std::vector<double> dist(count);
  const auto qv = q.values();
  for (std::size_t i = 0; i < count; ++i) {
    dist[i] = squared_distance(qv, std::span<const double>(matrix_.data() + i * dim_, dim_));
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(n, count);
  const auto closer = [&dist](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);

  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(Neighbor{order[i], dist[order[i]]});
  return out;
}

bool Collection::operator==(const Collection& other) const {
  return name_ == other.name_ && embedder_id_ == other.embedder_id_ && dim_ == other.dim_ &&
         infos_ == other.infos_ && matrix_ == other.matrix_;
}

std::string serialize(const Collection& c) {
  std::string out = fmt::format("{{\"schema\":{},\"name\":{},\"embedder_id\":{},\"dim\":{}}}\n", kSchemaVersion,
                                quote(c.name()), quote(c.embedder_id()), c.dim());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const RecordInfo& r = c.info(i);
    out += fmt::format(
        "{{\"id\":{},\"description\":{},\"metadata\":{{\"vehicle\":{},\"log_id\":{},\"window_start\":{},"
        "\"link\":{}}},\"vector\":[",
        quote(r.id), quote(r.description), quote(r.metadata.vehicle), quote(r.metadata.log_id),
        number(r.metadata.window_start), quote(r.metadata.link));
    const auto v = c.vector(i);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (j > 0) out.push_back(',');
      out += number(v[j]);
    }
    out += "]}\n";
  }
  out += fmt::format("{{\"checksum\":\"{:016x}\"}}\n", fnv1a64(out));
  return out;
}

Collection deserialize(std::string_view bytes, std::string_view source) {
  std::vector<std::string_view> lines;
  std::vector<std::size_t> offsets;  // byte offset where each line starts
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) {
      corrupt(source, lines.size() + 1, "last line is not newline-terminated (truncated file)");
    }
    offsets.push_back(pos);
    lines.push_back(bytes.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.size() < 2) corrupt(source, lines.size() + 1, "missing header or checksum line");

  const std::size_t last = lines.size() - 1;
  const json tail = json::parse(lines[last], nullptr, false);
  if (tail.is_discarded() || !tail.is_object() || tail.size() != 1 || !tail.contains("checksum") ||
      !tail["checksum"].is_string()) {
    corrupt(source, last + 1, "expected the checksum line");
  }
  const std::string expected = fmt::format("{:016x}", fnv1a64(bytes.substr(0, offsets[last])));
  if (tail["checksum"].get<std::string>() != expected) {
    corrupt(source, last + 1, fmt::format("checksum mismatch: file says {}, content hashes to {}",
                                          tail["checksum"].get<std::string>(), expected));
  }

  const json header = json::parse(lines[0], nullptr, false);
  if (header.is_discarded() || !header.is_object()) corrupt(source, 1, "header is not a JSON object");
  if (!header.contains("schema") || !header["schema"].is_number_integer() ||
      header["schema"].get<int>() != kSchemaVersion) {
    corrupt(source, 1, "unsupported schema");
  }
  std::optional<Collection> collection;
  try {
    collection.emplace(header.at("name").get<std::string>(), header.at("embedder_id").get<std::string>(),
                       header.at("dim").get<std::size_t>());
  } catch (const std::exception& e) {
    corrupt(source, 1, fmt::format("bad header: {}", e.what()));
  }

  for (std::size_t i = 1; i < last; ++i) {
    const json row = json::parse(lines[i], nullptr, false);
    if (row.is_discarded() || !row.is_object()) corrupt(source, i + 1, "record is not a JSON object");
    try {
      const json& meta = row.at("metadata");
      EmbeddedRecord rec{
          row.at("id").get<std::string>(),
          EmbeddingVector::from_unit(row.at("vector").get<std::vector<double>>()),
          row.at("description").get<std::string>(),
          RecordMetadata{meta.at("vehicle").get<std::string>(), meta.at("log_id").get<std::string>(),
                         meta.at("window_start").get<double>(), meta.at("link").get<std::string>()},
      };
      collection->add(std::move(rec));
    } catch (const json::exception& e) {
      corrupt(source, i + 1, fmt::format("bad record: {}", e.what()));
    } catch (const Error& e) {
      corrupt(source, i + 1, e.what());
    }
  }
  return std::move(*collection);
}

void save(const Collection& collection, const fs::path& path) {
  const std::string bytes = serialize(collection);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIoFailure, fmt::format("cannot write {}", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(Errc::kIoFailure, fmt::format("write failed: {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::kIoFailure, fmt::format("cannot replace {}", path.string()));
  }
}

Collection load_collection(const fs::path& path) {
  const std::string bytes = read_file(path);
  return deserialize(bytes, path.string());
}

ConcurrentCollection::ConcurrentCollection(Collection collection)
    : collection_(std::move(collection)), size_(collection_.size()) {}

void ConcurrentCollection::add(EmbeddedRecord record) {
  std::lock_guard gate(gate_);
  std::unique_lock lock(mutex_);
  collection_.add(std::move(record));
  size_.store(collection_.size(), std::memory_order_release);
}

}  // namespace genius
