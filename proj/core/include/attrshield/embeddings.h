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

#ifndef ATTRSHIELD_EMBEDDINGS_H_
#define ATTRSHIELD_EMBEDDINGS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace attrshield::emb {

struct Neighbor {
  std::string token;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Ascending by distance, ties by token.
using NeighborList = std::vector<Neighbor>;

// Word vectors of a fixed dimension. Unknown tokens (and the reserved
// "<unk>" token) read as the all-zero vector. Immutable once built.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim), zero_(dim, 0.0) {}

  // Returns false (and keeps the first vector) when the token already exists.
  // Throws std::invalid_argument on a dimension mismatch.
  bool Add(const std::string& token, std::span<const double> vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  bool Contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Vector for `token`; the zero vector when unknown.
  std::span<const double> Lookup(const std::string& token) const;
  std::span<const double> Row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  // Order-sensitive FNV-1a over tokens and dimension.
  std::uint64_t Fingerprint() const;

 private:
  std::size_t dim_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::vector<double> zero_;
};

struct LoadStats {
  std::size_t skipped = 0;
  std::size_t duplicates = 0;
};

// Parses the text word-vector format `token v1 ... vk`. k is taken from the
// first valid line. A header line of two integers (word2vec style) is
// ignored. Throws std::runtime_error on unreadable files or a dimension
// mismatch (with the line number); lines with non-numeric fields are skipped.
EmbeddingTable LoadEmbeddings(const std::filesystem::path& path, LoadStats* stats = nullptr);

void SaveEmbeddings(const std::filesystem::path& path, const EmbeddingTable& table);

// Euclidean distance. "<unk>" is accepted as the zero vector; any other
// unknown token throws std::out_of_range("... not in embedding table").
double Distance(const EmbeddingTable& table, const std::string& a, const std::string& b);

// Exact linear scan: up to `limit` tokens with 0 < distance <= eta, ascending
// with lexicographic tie-break. The query itself and "<unk>" are excluded.
// An unknown query yields an empty list.
NeighborList NearestNeighbors(const EmbeddingTable& table, const std::string& token,
                              double eta, std::size_t limit);

// Memoizes NearestNeighbors for a fixed (eta, limit); safe to share between
// threads.
class NeighborCache {
 public:
  NeighborCache(const EmbeddingTable& table, double eta, std::size_t limit)
      : table_(table), eta_(eta), limit_(limit) {}

  NeighborList Get(const std::string& token) const;
  const EmbeddingTable& table() const { return table_; }
  double eta() const { return eta_; }
  std::size_t limit() const { return limit_; }

 private:
  const EmbeddingTable& table_;
  double eta_;
  std::size_t limit_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, NeighborList> cache_;
};

}  // namespace attrshield::emb

#endif  // ATTRSHIELD_EMBEDDINGS_H_
