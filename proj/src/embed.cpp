#include "genius/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "genius/error.hpp"

namespace genius {
using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

}  // namespace

EmbeddingVector EmbeddingVector::normalize(std::vector<double> raw) {
  double sum_sq = 0.0;
  for (const double v : raw) {
    if (!std::isfinite(v)) throw Error(Errc::kInvalidArgument, "embedding has a non-finite component");
    sum_sq += v * v;
  }
  if (!(sum_sq > 0.0)) throw Error(Errc::kInvalidArgument, "cannot normalize a zero vector");
  const double inv = 1.0 / std::sqrt(sum_sq);
  for (double& v : raw) v *= inv;
  return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  double sum_sq = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::kInvalidArgument, "embedding has a non-finite component");
    sum_sq += v * v;
  }
  const double norm = std::sqrt(sum_sq);
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw Error(Errc::kInvalidArgument, fmt::format("embedding norm {} is not 1", norm));
  }
  return EmbeddingVector(std::move(values));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const unsigned char ch : text) {
    if (ch < 0x80 && std::isalnum(ch)) {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool has_tokens(std::string_view text) {
  for (const unsigned char ch : text) {
    if (ch < 0x80 && std::isalnum(ch)) return true;
  }
  return false;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = kFnvOffset;
  for (const unsigned char ch : bytes) {
    hash ^= ch;
    hash *= kFnvPrime;
  }
  return hash;
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.push_back(embed(texts[i]));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("text[{}]: {}", i, e.detail()));
    }
  }
  return out;
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw Error(Errc::kInvalidArgument, "hash embedder dimension must be positive");
}

std::string HashEmbedder::id() const { return fmt::format("hash-fnv1a-{}", dim_); }

EmbeddingVector HashEmbedder::embed(std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(Errc::kNoTokens, fmt::format("no tokens in \"{}\"", text));
  std::vector<double> acc(dim_, 0.0);
  for (const std::string& token : tokens) {
    const std::uint64_t h = fnv1a64(token);
    acc[h % dim_] += (h >> 63U) == 0U ? 1.0 : -1.0;
  }
  try {
    return EmbeddingVector::normalize(std::move(acc));
  } catch (const Error&) {
    throw Error(Errc::kNoTokens, fmt::format("tokens of \"{}\" cancel to a zero vector", text));
  }
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string id, std::size_t expected_dim, http::Options options,
                           std::size_t batch_size)
    : endpoint_(std::move(endpoint)),
      id_(id.empty() ? "http:" + endpoint_ : std::move(id)),
      dim_(expected_dim),
      options_(options),
      batch_size_(batch_size == 0 ? 1 : batch_size) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
  const std::string one(text);
  return request(std::span<const std::string>(&one, 1)).front();
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += batch_size_) {
    const std::size_t n = std::min(batch_size_, texts.size() - i);
    try {
      auto chunk = request(texts.subspan(i, n));
      for (auto& v : chunk) out.push_back(std::move(v));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("texts[{}..{}]: {}", i, i + n - 1, e.detail()));
    }
  }
  return out;
}

bool HttpEmbedder::healthy() const { return http::reachable(endpoint_, options_.timeout); }

std::vector<EmbeddingVector> HttpEmbedder::request(std::span<const std::string> texts) {
  const json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const auto reply = http::post_json(endpoint_, "/embed", body.dump(), options_);
  if (!reply) throw Error(Errc::kEmbedderServiceUnavailable, fmt::format("{} did not answer", endpoint_));
  if (reply->status != 200) {
    throw Error(Errc::kEmbedderServiceUnavailable, fmt::format("{}/embed returned HTTP {}", endpoint_, reply->status));
  }
  const json doc = json::parse(reply->body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("embeddings") || !doc["embeddings"].is_array() ||
      doc["embeddings"].size() != texts.size()) {
    throw Error(Errc::kEmbedderServiceUnavailable, fmt::format("{}/embed: malformed reply", endpoint_));
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const json& row : doc["embeddings"]) {
    std::vector<double> values;
    try {
      values = row.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw Error(Errc::kEmbedderServiceUnavailable, fmt::format("{}/embed: non-numeric embedding", endpoint_));
    }
    if (doc.contains("dim") && doc["dim"].is_number_unsigned() && doc["dim"].get<std::size_t>() != values.size()) {
      throw Error(Errc::kDimensionMismatch, fmt::format("{}/embed: reported dim {} but sent {} values", endpoint_,
                                                        doc["dim"].get<std::size_t>(), values.size()));
    }
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, values.size()) && expected != values.size()) {
      throw Error(Errc::kDimensionMismatch,
                  fmt::format("{}/embed: vector of length {}, collection expects {}", endpoint_, values.size(), expected));
    }
    try {
      out.push_back(EmbeddingVector::normalize(std::move(values)));
    } catch (const Error& e) {
      throw Error(Errc::kEmbedderServiceUnavailable, fmt::format("{}/embed: {}", endpoint_, e.what()));
    }
  }
  return out;
}

EmbeddingVector embed(std::string_view text, Embedder& embedder) {
  if (!has_tokens(text)) throw Error(Errc::kNoTokens, fmt::format("no tokens in \"{}\"", text));
  return embedder.embed(text);
}

std::vector<EmbeddingVector> batch_embed(std::span<const std::string> texts, Embedder& embedder) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!has_tokens(texts[i])) throw Error(Errc::kNoTokens, fmt::format("text[{}]: no tokens", i));
  }
  return embedder.embed_batch(texts);
}

}  // namespace genius
