#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "genius/embed.hpp"

namespace genius {

struct RecordMetadata {
  std::string vehicle;
  std::string log_id;
  double window_start = 0.0;
  std::string link;

  bool operator==(const RecordMetadata&) const = default;
};

struct EmbeddedRecord {
  std::string id;
  EmbeddingVector vector;
  std::string description;
  RecordMetadata metadata;

  bool operator==(const EmbeddedRecord&) const = default;
};

// A stored record without its vector.
struct RecordInfo {
  std::string id;
  std::string description;
  RecordMetadata metadata;

  bool operator==(const RecordInfo&) const = default;
};

struct Neighbor {
  std::size_t index;  // insertion position in the collection
  double distance;    // squared Euclidean
};

// Insertion-ordered set of records bound to one (embedder_id, dim). Vectors
// live in one contiguous row-major buffer for the brute-force scan.
class Collection {
 public:
  Collection(std::string name, std::string embedder_id, std::size_t dim);

  const std::string& name() const noexcept { return name_; }
  const std::string& embedder_id() const noexcept { return embedder_id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return infos_.size(); }
  bool empty() const noexcept { return infos_.empty(); }

  const RecordInfo& info(std::size_t index) const { return infos_.at(index); }
  std::span<const double> vector(std::size_t index) const;
  EmbeddedRecord record(std::size_t index) const;
  // Insertion index of id, or npos.
  std::size_t find(std::string_view id) const;

  // Throws DuplicateId or DimensionMismatch; on throw the collection is unchanged.
  void add(EmbeddedRecord record);

  // The min(n, size()) nearest records by squared Euclidean distance, ascending,
  // ties broken by insertion order.
  std::vector<Neighbor> query(const EmbeddingVector& q, std::size_t n) const;

  bool operator==(const Collection& other) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::string name_;
  std::string embedder_id_;
  std::size_t dim_;
  std::vector<RecordInfo> infos_;
  std::vector<double> matrix_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Store file bytes: header line, one JSON line per record (vectors at 17
// significant digits), and a trailing FNV-1a-64 checksum line.
std::string serialize(const Collection& collection);
Collection deserialize(std::string_view bytes, std::string_view source = "<store>");

// Writes to a temporary sibling file, then renames over path.
void save(const Collection& collection, const std::filesystem::path& path);
Collection load_collection(const std::filesystem::path& path);

// Reader/writer wrapper: any number of concurrent readers or one writer. A
// waiting writer holds the gate, so new readers queue behind it.
class ConcurrentCollection {
 public:
  explicit ConcurrentCollection(Collection collection);

  void add(EmbeddedRecord record);

  template <class Fn>
  decltype(auto) read(Fn&& fn) const {
    std::unique_lock gate(gate_);
    std::shared_lock lock(mutex_);
    gate.unlock();
    return std::forward<Fn>(fn)(collection_);
  }

  std::size_t size() const noexcept { return size_.load(std::memory_order_acquire); }

 private:
  mutable std::mutex gate_;
  mutable std::shared_mutex mutex_;
  Collection collection_;
  std::atomic<std::size_t> size_;
};

}  // namespace genius
