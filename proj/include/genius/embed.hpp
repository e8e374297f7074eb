#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genius/http_client.hpp"

namespace genius {

inline constexpr std::size_t kDefaultHashDim = 256;
inline constexpr double kUnitNormTolerance = 1e-6;

// Unit-norm, finite embedding.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  // Scales raw to unit length. Throws InvalidArgument on zero or non-finite input.
  static EmbeddingVector normalize(std::vector<double> raw);
  // Accepts values already of unit norm (within kUnitNormTolerance), unchanged.
  static EmbeddingVector from_unit(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// Lowercased ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);
bool has_tokens(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

class Embedder {
 public:
  virtual ~Embedder() = default;

  // Identifies the model; a collection is bound to exactly one.
  virtual std::string id() const = 0;
  // Output dimension, or 0 while a remote service has not reported it yet.
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);
  // False when a remote backend cannot be reached.
  virtual bool healthy() const { return true; }
};

// Signed feature hashing: each token adds +-1 to bucket fnv1a64(token) % dim,
// the sign taken from bit 63 of the hash; the sum is L2-normalized. Bag of
// tokens, so word order is ignored.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = kDefaultHashDim);

  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

// POST {endpoint}/embed {"texts": [...]} -> {"embeddings": [[...]], "dim": D}.
// Vectors are re-normalized. The first reply fixes D unless expected_dim is set.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(std::string endpoint, std::string id = {}, std::size_t expected_dim = 0,
                        http::Options options = {}, std::size_t batch_size = 32);

  std::string id() const override { return id_; }
  std::size_t dim() const override { return dim_.load(); }
  EmbeddingVector embed(std::string_view text) override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;
  bool healthy() const override;

 private:
  std::vector<EmbeddingVector> request(std::span<const std::string> texts);

  std::string endpoint_;
  std::string id_;
  std::atomic<std::size_t> dim_;
  http::Options options_;
  std::size_t batch_size_;
};

// Rejects texts without tokens (NoTokens) before calling the embedder.
EmbeddingVector embed(std::string_view text, Embedder& embedder);

// Element i equals embed(texts[i]); errors carry the failing index.
std::vector<EmbeddingVector> batch_embed(std::span<const std::string> texts, Embedder& embedder);

}  // namespace genius
