#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "fake_server.hpp"
#include "genius/embed.hpp"
#include "test_support.hpp"

namespace genius {
namespace {

using nlohmann::json;
using testing::error_code_of;
using testing::FakeServer;

// Independent FNV-1a-64 for the oracle; the standard offset basis and prime.
std::uint64_t oracle_fnv(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"tunnel", "snow", "bridge", "lane", "rain", "exit", "garage",
                                                 "speed", "15.5", "m/s", "Sweden", "HIGHWAY", "under", "wet",
                                                 "car", "accident", "left", "right", "dim", "portal"};
  std::string text;
  const std::size_t n = 1 + rng() % 12;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) text += rng() % 5 == 0 ? ", " : " ";
    text += words[rng() % words.size()];
  }
  return text;
}

TEST(Tokenize, LowercasedAlphanumericRuns) {
  EXPECT_EQ(tokenize("Snowy Highway-in_Sweden 15.5 m/s!"),
            (std::vector<std::string>{"snowy", "highway", "in", "sweden", "15", "5", "m", "s"}));
  EXPECT_TRUE(tokenize("  ,;!  ").empty());
  EXPECT_FALSE(has_tokens(""));
  EXPECT_TRUE(has_tokens("a"));
}

TEST(Fnv, MatchesKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(fnv1a64("tunnel"), oracle_fnv("tunnel"));
}

TEST(HashEmbedder, SameTextSameVector) {
  HashEmbedder e;
  const auto a = embed("tunnel", e);
  const auto b = embed("tunnel", e);
  EXPECT_EQ(a, b);
  EXPECT_EQ(squared_distance(a.values(), b.values()), 0.0);
}

TEST(HashEmbedder, DistinctBucketsAreOrthogonal) {
  const std::uint64_t ht = oracle_fnv("tunnel");
  const std::uint64_t hs = oracle_fnv("snow");
  ASSERT_NE(ht, hs);
  ASSERT_NE(ht % 256, hs % 256) << "oracle precondition: no bucket collision";

  HashEmbedder e;
  const auto t = embed("tunnel", e);
  const auto s = embed("snow", e);
  EXPECT_EQ(t.values()[ht % 256], (ht >> 63) ? -1.0 : 1.0);
  EXPECT_EQ(s.values()[hs % 256], (hs >> 63) ? -1.0 : 1.0);
  EXPECT_EQ(squared_distance(t.values(), s.values()), 2.0);
}

TEST(HashEmbedder, UnitNormDefaultDimension) {
  HashEmbedder e;
  EXPECT_EQ(e.id(), "hash-fnv1a-256");
  const auto v = embed("snowy highway in sweden", e);
  EXPECT_EQ(v.dim(), 256u);
  EXPECT_NEAR(norm(v.values()), 1.0, 1e-6);
}

TEST(HashEmbedder, WordOrderIgnored) {
  HashEmbedder e;
  EXPECT_EQ(embed("car changed lane", e), embed("lane changed car", e));
}

TEST(HashEmbedder, RejectsTokenlessText) {
  HashEmbedder e;
  EXPECT_EQ(error_code_of([&] { embed("", e); }), Errc::kNoTokens);
  EXPECT_EQ(error_code_of([&] { embed("?! --", e); }), Errc::kNoTokens);
  EXPECT_EQ(error_code_of([] { HashEmbedder(0); }), Errc::kInvalidArgument);
}

TEST(HashEmbedder, NormAndInnerProductIdentityProperty) {
  HashEmbedder e;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = embed(random_text(rng), e);
    const auto b = embed(random_text(rng), e);
    ASSERT_NEAR(norm(a.values()), 1.0, 1e-6);
    const double d2 = squared_distance(a.values(), b.values());
    ASSERT_NEAR(d2, 2.0 - 2.0 * dot(a.values(), b.values()), 1e-9);
    ASSERT_GE(d2, 0.0);
    ASSERT_LE(d2, 4.0);
  }
}

TEST(BatchEmbed, EmptyAndDuplicateInputs) {
  HashEmbedder e;
  EXPECT_TRUE(batch_embed(std::vector<std::string>{}, e).empty());
  const auto out = batch_embed(std::vector<std::string>{"a b", "a b"}, e);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], out[1]);
}

TEST(BatchEmbed, EightyDescriptionsAllUnitNorm) {
  HashEmbedder e;
  std::mt19937_64 rng(80);
  std::vector<std::string> texts;
  for (int i = 0; i < 80; ++i) texts.push_back(random_text(rng));
  const auto out = batch_embed(texts, e);
  ASSERT_EQ(out.size(), 80u);
  for (const auto& v : out) EXPECT_NEAR(norm(v.values()), 1.0, 1e-6);
}

TEST(BatchEmbed, EqualsElementwiseEmbedProperty) {
  HashEmbedder e;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> texts(rng() % 6);
    for (auto& t : texts) t = random_text(rng);
    const auto batch = batch_embed(texts, e);
    ASSERT_EQ(batch.size(), texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) ASSERT_EQ(batch[i], embed(texts[i], e));
  }
}

TEST(BatchEmbed, ErrorNamesIndex) {
  HashEmbedder e;
  try {
    batch_embed(std::vector<std::string>{"ok", "...", "fine"}, e);
    FAIL() << "expected NoTokens";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::kNoTokens);
    EXPECT_NE(std::string(err.what()).find("text[1]"), std::string::npos) << err.what();
  }
}

TEST(EmbeddingVectorType, Construction) {
  const auto v = EmbeddingVector::normalize({3.0, 4.0});
  EXPECT_DOUBLE_EQ(v.values()[0], 0.6);
  EXPECT_DOUBLE_EQ(v.values()[1], 0.8);
  EXPECT_EQ(error_code_of([] { EmbeddingVector::normalize({0.0, 0.0}); }), Errc::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { EmbeddingVector::normalize({NAN, 1.0}); }), Errc::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { EmbeddingVector::from_unit({0.6, 0.81}); }), Errc::kInvalidArgument);
  EXPECT_EQ(EmbeddingVector::from_unit({0.6, 0.8}).dim(), 2u);
}

// --- remote embedder --------------------------------------------------------------

http::Options fast() { return {std::chrono::milliseconds(2000), 1, std::chrono::milliseconds(1)}; }

// Replies with (len(text), 1, 0) per text, unnormalized.
void length_embedder(httplib::Server& s, int* calls, std::size_t dim = 3) {
  s.Post("/embed", [calls, dim](const httplib::Request& req, httplib::Response& res) {
    if (calls) ++*calls;
    json out = {{"embeddings", json::array()}, {"dim", dim}};
    const json request = json::parse(req.body);
    for (const auto& t : request.at("texts")) {
      std::vector<double> v(dim, 0.0);
      v[0] = static_cast<double>(t.get<std::string>().size());
      v[1] = 1.0;
      out["embeddings"].push_back(v);
    }
    res.set_content(out.dump(), "application/json");
  });
  s.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
}

TEST(HttpEmbedderTest, RenormalizesAndLearnsDimension) {
  FakeServer server([](httplib::Server& s) { length_embedder(s, nullptr); });
  HttpEmbedder e(server.url(), "", 0, fast());
  EXPECT_EQ(e.id(), "http:" + server.url());
  EXPECT_EQ(e.dim(), 0u);
  const auto v = embed("abc", e);
  EXPECT_EQ(e.dim(), 3u);
  EXPECT_NEAR(norm(v.values()), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(v.values()[0], 3.0 / std::sqrt(10.0));
  EXPECT_TRUE(e.healthy());
}

TEST(HttpEmbedderTest, BatchesInChunks) {
  int calls = 0;
  FakeServer server([&](httplib::Server& s) { length_embedder(s, &calls); });
  HttpEmbedder e(server.url(), "bge-large", 0, fast(), 2);
  const std::vector<std::string> texts = {"a", "bb", "ccc", "dddd", "eeeee"};
  const auto out = batch_embed(texts, e);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(calls, 3);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(out[i], embed(texts[i], e));
}

TEST(HttpEmbedderTest, DimensionMismatchAgainstExpected) {
  FakeServer server([](httplib::Server& s) { length_embedder(s, nullptr, 4); });
  HttpEmbedder e(server.url(), "m", 3, fast());
  EXPECT_EQ(error_code_of([&] { embed("abc", e); }), Errc::kDimensionMismatch);
}

TEST(HttpEmbedderTest, ServiceFailures) {
  FakeServer failing([](httplib::Server& s) {
    s.Post("/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  });
  HttpEmbedder down(failing.url(), "m", 0, fast());
  EXPECT_EQ(error_code_of([&] { embed("abc", down); }), Errc::kEmbedderServiceUnavailable);

  FakeServer garbled([](httplib::Server& s) {
    s.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"embeddings": [[1, 2], [3, 4]]})", "application/json");
    });
  });
  HttpEmbedder bad(garbled.url(), "m", 0, fast());
  EXPECT_EQ(error_code_of([&] { embed("one text", bad); }), Errc::kEmbedderServiceUnavailable);

  HttpEmbedder nobody(testing::dead_url(), "m", 0, fast());
  EXPECT_EQ(error_code_of([&] { embed("abc", nobody); }), Errc::kEmbedderServiceUnavailable);
  EXPECT_FALSE(nobody.healthy());
}

}  // namespace
}  // namespace genius
