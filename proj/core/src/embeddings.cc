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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "attrshield/corpus.h"

namespace attrshield::emb {
namespace {

bool ParseDouble(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool IsInteger(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

bool EmbeddingTable::Add(const std::string& token, std::span<const double> vec) {
  if (tokens_.empty() && dim_ == 0) {
    dim_ = vec.size();
    zero_.assign(dim_, 0.0);
  }
  if (vec.size() != dim_) {
    throw std::invalid_argument("embedding dimension mismatch for '" + token + "': expected " +
                                std::to_string(dim_) + ", got " + std::to_string(vec.size()));
  }
  if (token == corpus::kUnkToken || index_.count(token)) return false;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  data_.insert(data_.end(), vec.begin(), vec.end());
  return true;
}

std::span<const double> EmbeddingTable::Lookup(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return zero_;
  return Row(it->second);
}

std::uint64_t EmbeddingTable::Fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (char c : std::to_string(dim_)) mix(static_cast<unsigned char>(c));
  for (const auto& t : tokens_) {
    mix(0);
    for (char c : t) mix(static_cast<unsigned char>(c));
  }
  return h;
}

EmbeddingTable LoadEmbeddings(const std::filesystem::path& path, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read embedding file: " + path.string());

  EmbeddingTable table;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::vector<std::string> fields;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    fields.clear();
    for (std::string f; ls >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && IsInteger(fields[0]) && IsInteger(fields[1])) {
      continue;
    }
    if (fields.size() < 2) {
      ++local.skipped;
      continue;
    }
    vec.clear();
    bool ok = true;
    for (std::size_t i = 1; i < fields.size() && ok; ++i) {
      double v = 0.0;
      ok = ParseDouble(fields[i], v);
      vec.push_back(v);
    }
    if (!ok) {
      ++local.skipped;
      continue;
    }
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": inconsistent embedding dimension " +
                               std::to_string(vec.size()) + " (expected " + std::to_string(dim) +
                               ")");
    }
    if (!table.Add(fields[0], vec)) ++local.duplicates;
  }
  if (stats) *stats = local;
  return table;
}

void SaveEmbeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    for (double v : table.Row(i)) out << ' ' << v;
    out << '\n';
  }
}

double Distance(const EmbeddingTable& table, const std::string& a, const std::string& b) {
  for (const auto* t : {&a, &b}) {
    if (*t != corpus::kUnkToken && !table.Contains(*t)) {
      throw std::out_of_range("'" + *t + "' not in embedding table");
    }
  }
  return std::sqrt(SquaredDistance(table.Lookup(a), table.Lookup(b)));
}

NeighborList NearestNeighbors(const EmbeddingTable& table, const std::string& token,
                              double eta, std::size_t limit) {
  NeighborList out;
  if (!table.Contains(token) || !(eta > 0.0) || limit == 0) return out;
  const auto query = table.Lookup(token);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& cand = table.tokens()[i];
    if (cand == token) continue;
    const double d = std::sqrt(SquaredDistance(query, table.Row(i)));
    if (d > 0.0 && d <= eta) out.push_back({cand, d});
  }
  auto by_distance = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.token < b.token;
  };
  if (out.size() > limit) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(limit), out.end(),
                      by_distance);
    out.resize(limit);
  } else {
    std::sort(out.begin(), out.end(), by_distance);
  }
  return out;
}

NeighborList NeighborCache::Get(const std::string& token) const {
  {
    std::shared_lock lock(mu_);
    auto it = cache_.find(token);
    if (it != cache_.end()) return it->second;
  }
  NeighborList result = NearestNeighbors(table_, token, eta_, limit_);
  std::unique_lock lock(mu_);
  cache_.emplace(token, result);
  return result;
}

}  // namespace attrshield::emb
