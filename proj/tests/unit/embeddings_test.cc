/*
 * Copyright 2026 The Attrshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attrshield/embeddings.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "attrshield/rng.h"
#include "test_util.h"

namespace attrshield::emb {
namespace {

using ::attrshield::testing::MakeTable;
using ::attrshield::testing::TempDir;
using ::attrshield::testing::WriteFile;

// "awesome" and "amazing" sit 0.3 apart; every other pair is more than 0.5
// apart, so the distances can be checked by hand.
constexpr const char* kFixture =
    "awesome 0.0 0.0 0.0\n"
    "amazing 0.3 0.0 0.0\n"
    "terrible 0.0 2.0 0.0\n"
    "blog 0.0 0.0 3.0\n"
    "post 0.0 0.6 3.0\n";

TEST(LoadEmbeddingsTest, TwoLinesOfThree) {
  TempDir dir;
  WriteFile(dir / "e.txt", "cat 1 2 3\ndog 4 5 6\n");
  const auto t = LoadEmbeddings(dir / "e.txt");
  EXPECT_EQ(t.dim(), 3u);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t.Lookup("dog")[1], 5.0);
}

TEST(LoadEmbeddingsTest, NonNumericLineSkipped) {
  TempDir dir;
  WriteFile(dir / "e.txt", "dog 1.0 2.0 3.0\ncat 1.0 x 2.0\n");
  LoadStats stats;
  const auto t = LoadEmbeddings(dir / "e.txt", &stats);
  EXPECT_EQ(stats.skipped, 1u);
  EXPECT_FALSE(t.Contains("cat"));
}

TEST(LoadEmbeddingsTest, DuplicateKeepsFirst) {
  TempDir dir;
  WriteFile(dir / "e.txt", "cat 1 1\ncat 2 2\n");
  LoadStats stats;
  const auto t = LoadEmbeddings(dir / "e.txt", &stats);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(stats.duplicates, 1u);
  EXPECT_DOUBLE_EQ(t.Lookup("cat")[0], 1.0);
}

TEST(LoadEmbeddingsTest, InconsistentDimensionReportsLine) {
  TempDir dir;
  WriteFile(dir / "e.txt", "cat 1 1\ndog 2 2 2\n");
  try {
    LoadEmbeddings(dir / "e.txt");
    FAIL() << "expected a parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(LoadEmbeddingsTest, Word2VecHeaderIgnored) {
  TempDir dir;
  WriteFile(dir / "e.txt", "2 2\ncat 1 1\ndog 2 2\n");
  EXPECT_EQ(LoadEmbeddings(dir / "e.txt").size(), 2u);
}

TEST(LoadEmbeddingsTest, SaveRoundTripsExactly) {
  TempDir dir;
  auto t = MakeTable({{"a", {0.1, 1.0 / 3.0}}, {"b", {-2.5e-7, 7.0}}});
  SaveEmbeddings(dir / "o.txt", *t);
  const auto back = LoadEmbeddings(dir / "o.txt");
  EXPECT_EQ(back.Fingerprint(), t->Fingerprint());
  EXPECT_EQ(back.Lookup("a")[1], 1.0 / 3.0);
}

TEST(EmbeddingTableTest, UnknownAndUnkReadAsZero) {
  auto t = MakeTable({{"a", {1.0, 2.0}}});
  for (double x : t->Lookup("nope")) EXPECT_EQ(x, 0.0);
  for (double x : t->Lookup("<unk>")) EXPECT_EQ(x, 0.0);
}

TEST(DistanceTest, HandValues) {
  auto t = MakeTable({{"a", {0.0, 0.0}}, {"b", {3.0, 4.0}}});
  EXPECT_DOUBLE_EQ(Distance(*t, "a", "b"), 5.0);
  EXPECT_DOUBLE_EQ(Distance(*t, "b", "b"), 0.0);
}

TEST(DistanceTest, UnknownTokenThrows) {
  auto t = MakeTable({{"a", {0.0, 0.0}}});
  try {
    Distance(*t, "a", "zzz");
    FAIL();
  } catch (const std::out_of_range& e) {
    EXPECT_NE(std::string(e.what()).find("not in embedding table"), std::string::npos);
  }
}

TEST(DistanceTest, Symmetric) {
  Rng rng = MakeRng(3, {1});
  EmbeddingTable t(4);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> v(4);
    for (double& x : v) x = UniformUnit(rng) * 2 - 1;
    t.Add("w" + std::to_string(i), v);
  }
  for (int i = 0; i < 20; ++i) {
    const auto a = "w" + std::to_string(UniformIndex(rng, 20));
    const auto b = "w" + std::to_string(UniformIndex(rng, 20));
    EXPECT_EQ(Distance(t, a, b), Distance(t, b, a));
  }
}

TEST(NearestNeighborsTest, PlantedFixture) {
  TempDir dir;
  WriteFile(dir / "f.txt", kFixture);
  const auto t = LoadEmbeddings(dir / "f.txt");
  const auto n = NearestNeighbors(t, "awesome", 0.5, 8);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].token, "amazing");
  EXPECT_NEAR(n[0].distance, 0.3, 1e-12);
}

TEST(NearestNeighborsTest, ThresholdExcludesFartherNeighbor) {
  TempDir dir;
  WriteFile(dir / "f.txt", kFixture);
  const auto t = LoadEmbeddings(dir / "f.txt");
  EXPECT_TRUE(NearestNeighbors(t, "blog", 0.5, 8).empty());
  EXPECT_EQ(NearestNeighbors(t, "blog", 0.6, 8).size(), 1u);
}

TEST(NearestNeighborsTest, ZeroEtaAndUnknownAreEmpty) {
  auto t = MakeTable({{"a", {0.0}}, {"b", {0.0}}});
  EXPECT_TRUE(NearestNeighbors(*t, "a", 0.0, 8).empty());
  EXPECT_TRUE(NearestNeighbors(*t, "zzz", 1.0, 8).empty());
}

TEST(NearestNeighborsTest, LimitKeepsNearest) {
  auto t = MakeTable({{"q", {0.0}}, {"far", {0.3}}, {"near", {0.2}}});
  const auto n = NearestNeighbors(*t, "q", 0.5, 1);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].token, "near");
}

TEST(NearestNeighborsTest, TiesBreakLexicographically) {
  auto t = MakeTable({{"q", {0.0, 0.0}}, {"b", {0.0, 0.1}}, {"a", {0.1, 0.0}}});
  const auto n = NearestNeighbors(*t, "q", 0.5, 8);
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0].token, "a");
  EXPECT_EQ(n[1].token, "b");
}

// Exhaustive scan used as the reference for random vocabularies.
NeighborList BruteForce(const EmbeddingTable& t, const std::string& w, double eta) {
  NeighborList all;
  for (const auto& tok : t.tokens()) {
    if (tok == w) continue;
    const double d = Distance(t, w, tok);
    if (d > 0.0 && d <= eta) all.push_back({tok, d});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.token < b.token;
  });
  return all;
}

TEST(NearestNeighborsTest, MatchesBruteForceAndPrefixProperty) {
  Rng rng = MakeRng(11, {2});
  EmbeddingTable t(3);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> v(3);
    for (double& x : v) x = UniformUnit(rng);
    t.Add("t" + std::to_string(i), v);
  }
  for (int q = 0; q < 30; ++q) {
    const auto w = "t" + std::to_string(UniformIndex(rng, 300));
    const auto full = BruteForce(t, w, 0.3);
    EXPECT_EQ(NearestNeighbors(t, w, 0.3, 1000), full);
    const auto cut = NearestNeighbors(t, w, 0.3, 5);
    ASSERT_LE(cut.size(), 5u);
    for (std::size_t i = 0; i < cut.size(); ++i) {
      EXPECT_EQ(cut[i], full[i]);
      EXPECT_GT(cut[i].distance, 0.0);
      EXPECT_LE(cut[i].distance, 0.3);
    }
  }
}

TEST(NeighborCacheTest, ConcurrentGetsAgreeWithDirectSearch) {
  Rng rng = MakeRng(5, {3});
  EmbeddingTable t(2);
  for (int i = 0; i < 100; ++i) {
    t.Add("t" + std::to_string(i), std::vector<double>{UniformUnit(rng), UniformUnit(rng)});
  }
  NeighborCache cache(t, 0.2, 4);
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int k = 0; k < 4; ++k) {
    threads.emplace_back([&] {
      for (int i = 0; i < 100; ++i) {
        const auto w = "t" + std::to_string(i);
        if (cache.Get(w) != NearestNeighbors(t, w, 0.2, 4)) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

}  // namespace
}  // namespace attrshield::emb
