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

#include "attrshield/candidates.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace attrshield::cand {
namespace {

std::vector<std::string> SplitChars(const std::string& word) {
  std::vector<std::string> chars;
  for (std::size_t i = 0; i < word.size();) {
    const auto c = static_cast<unsigned char>(word[i]);
    std::size_t n = 1;
    if (c >= 0xF0) n = 4;
    else if (c >= 0xE0) n = 3;
    else if (c >= 0xC0) n = 2;
    n = std::min(n, word.size() - i);
    chars.push_back(word.substr(i, n));
    i += n;
  }
  return chars;
}

std::string Join(const std::vector<std::string>& chars) {
  std::string s;
  for (const auto& c : chars) s += c;
  return s;
}

std::string RandomLetter(Rng& rng) {
  return std::string(1, static_cast<char>('a' + UniformIndex(rng, 26)));
}

}  // namespace

const char* TransformName(VisualTransform t) {
  switch (t) {
    case VisualTransform::kInsert: return "insert";
    case VisualTransform::kRemove: return "remove";
    case VisualTransform::kSwap: return "swap";
    case VisualTransform::kSubstitute: return "substitute";
    case VisualTransform::kLeet: return "leet";
  }
  return "?";
}

std::string WordCandidate::Provenance() const {
  if (transform) return TransformName(*transform);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", distance);
  return buf;
}

// ---------------------------------------------------------------------------
// LeetMap

LeetMap::LeetMap(std::vector<std::pair<std::string, std::string>> entries)
    : entries_(std::move(entries)) {
  for (const auto& [k, v] : entries_) {
    if (k.empty()) throw std::invalid_argument("leet map keys must be non-empty");
  }
  std::stable_sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return SplitChars(a.first).size() > SplitChars(b.first).size();
  });
}

LeetMap LeetMap::Default() {
  return LeetMap({{"straight", "str8"}, {"o", "0"}, {"l", "1"}, {"z", "2"}});
}

LeetMap LeetMap::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read leet map: " + path.string());
  try {
    nlohmann::ordered_json j;
    in >> j;
    if (!j.is_object()) throw std::runtime_error("leet map must be a JSON object");
    std::vector<std::pair<std::string, std::string>> entries;
    for (auto& [k, v] : j.items()) entries.emplace_back(k, v.get<std::string>());
    return LeetMap(std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed leet map " + path.string() + ": " + e.what());
  }
}

std::optional<std::string> LeetMap::Apply(const std::string& word) const {
  const auto chars = SplitChars(word);
  for (const auto& [key, repl] : entries_) {
    if (SplitChars(key).size() == 1) {
      for (std::size_t i = 1; i + 1 < chars.size(); ++i) {
        if (chars[i] == key) {
          auto out = chars;
          out[i] = repl;
          return Join(out);
        }
      }
    } else if (auto pos = word.find(key); pos != std::string::npos) {
      std::string out = word;
      out.replace(pos, key.size(), repl);
      return out;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Candidate construction

std::vector<WordCandidate> SemanticCandidates(const std::string& word,
                                              const emb::EmbeddingTable& table, double eta,
                                              std::size_t max_n) {
  std::vector<WordCandidate> out;
  for (auto& n : emb::NearestNeighbors(table, word, eta, max_n)) {
    out.push_back({std::move(n.token), CandidateKind::kSemantic, n.distance, std::nullopt});
  }
  return out;
}

std::vector<WordCandidate> SemanticCandidates(const std::string& word,
                                              const emb::NeighborCache& neighbors) {
  std::vector<WordCandidate> out;
  for (auto& n : neighbors.Get(word)) {
    out.push_back({std::move(n.token), CandidateKind::kSemantic, n.distance, std::nullopt});
  }
  return out;
}

std::vector<WordCandidate> VisualCandidates(const std::string& word, Rng& rng,
                                            const LeetMap& leet) {
  std::vector<WordCandidate> out;
  auto emit = [&](std::string s, VisualTransform t) {
    if (s == word) return;
    for (const auto& c : out) {
      if (c.surface == s) return;
    }
    out.push_back({std::move(s), CandidateKind::kVisual, 0.0, t});
  };

  const auto chars = SplitChars(word);
  const std::size_t n = chars.size();
  if (n >= 3) {
    {
      // Insert before index 1..n-1.
      auto v = chars;
      const std::size_t at = 1 + UniformIndex(rng, n - 1);
      const bool space = UniformUnit(rng) < 0.5;
      v.insert(v.begin() + static_cast<std::ptrdiff_t>(at), space ? std::string(" ") : RandomLetter(rng));
      emit(Join(v), VisualTransform::kInsert);
    }
    {
      auto v = chars;
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(1 + UniformIndex(rng, n - 2)));
      emit(Join(v), VisualTransform::kRemove);
    }
    {
      std::vector<std::size_t> swappable;
      for (std::size_t i = 1; i + 2 < n; ++i) {
        if (chars[i] != chars[i + 1]) swappable.push_back(i);
      }
      if (!swappable.empty()) {
        auto v = chars;
        const std::size_t i = swappable[UniformIndex(rng, swappable.size())];
        std::swap(v[i], v[i + 1]);
        emit(Join(v), VisualTransform::kSwap);
      }
    }
    {
      auto v = chars;
      const std::size_t i = 1 + UniformIndex(rng, n - 2);
      std::string letter;
      do {
        letter = RandomLetter(rng);
      } while (letter == v[i]);
      v[i] = letter;
      emit(Join(v), VisualTransform::kSubstitute);
    }
  }
  if (auto l = leet.Apply(word)) emit(std::move(*l), VisualTransform::kLeet);
  return out;
}

std::vector<WordCandidate> RawPool(const TokenizedDocument& doc, std::size_t position,
                                   const PerturbationContext& ctx, Rng& rng) {
  const std::string& word = doc.tokens.at(position);
  std::vector<WordCandidate> pool;
  if (ctx.neighbors) pool = SemanticCandidates(word, *ctx.neighbors);
  std::unordered_set<std::string> seen;
  for (const auto& c : pool) seen.insert(c.surface);
  for (auto& v : VisualCandidates(word, rng, ctx.leet)) {
    if (seen.insert(v.surface).second) pool.push_back(std::move(v));
  }
  return pool;
}

std::optional<std::size_t> SampleIndex(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += std::max(0.0, w);
  if (!(total > 0.0)) return std::nullopt;
  const double r = UniformUnit(rng) * total;
  double acc = 0.0;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    acc += weights[i];
    last = i;
    if (r < acc) return i;
  }
  return last;
}

// ---------------------------------------------------------------------------
// Perturbation subroutine

PerturbationResult PerturbationSubroutine(const TokenizedDocument& doc, int target,
                                          std::span<const double> select_probs,
                                          const PerturbationContext& ctx, Rng& rng) {
  if (!ctx.model) throw std::invalid_argument("perturbation needs a model");
  if (select_probs.size() != doc.size()) {
    throw std::invalid_argument("selection probabilities do not match the document length");
  }
  PerturbationResult result;
  result.doc = doc;

  std::vector<double> probs(select_probs.begin(), select_probs.end());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (doc.perturbed_mask[i]) probs[i] = 0.0;
  }

  std::optional<std::size_t> position;
  std::vector<WordCandidate> raw;
  for (int attempt = 0; attempt <= ctx.max_resamples; ++attempt) {
    position = SampleIndex(probs, rng);
    if (!position) return result;
    raw = RawPool(doc, *position, ctx, rng);
    if (!raw.empty()) break;
    position.reset();
  }
  if (!position) return result;
  const std::size_t pos = *position;

  const std::string boundary(lm::kBoundary);
  const std::string& prev = pos > 0 ? doc.tokens[pos - 1] : boundary;
  const std::string& next = pos + 1 < doc.size() ? doc.tokens[pos + 1] : boundary;

  clf::EncodedDocument x = clf::Encode(doc, ctx.model->embeddings());
  std::vector<ScoredCandidate> semantic, visual;
  for (auto& c : raw) {
    const auto v = ctx.model->embeddings().Lookup(c.surface);
    std::copy(v.begin(), v.end(), x.row(pos).begin());
    ScoredCandidate sc{std::move(c), ctx.model->PredictEncoded(x)[target], 0.0};
    if (sc.candidate.kind == CandidateKind::kSemantic) {
      sc.lm_score = ctx.lm ? ctx.lm->ContextScore(prev, sc.candidate.surface, next) : 0.0;
      semantic.push_back(std::move(sc));
    } else {
      visual.push_back(std::move(sc));
    }
  }

  // Keep the best-fitting half of the semantic candidates.
  const std::size_t keep = ctx.pool_size / 2;
  std::stable_sort(semantic.begin(), semantic.end(),
                   [](const auto& a, const auto& b) { return a.lm_score > b.lm_score; });
  if (semantic.size() > keep) semantic.resize(keep);

  std::vector<ScoredCandidate> survivors = std::move(semantic);
  const std::size_t n_semantic = survivors.size();
  survivors.insert(survivors.end(), std::make_move_iterator(visual.begin()),
                   std::make_move_iterator(visual.end()));
  if (survivors.empty()) return result;

  std::size_t best = 0;
  for (std::size_t i = 1; i < survivors.size(); ++i) {
    if (survivors[i].score > survivors[best].score) best = i;
  }

  result.applied = true;
  result.position = pos;
  result.chosen = survivors[best].candidate;
  result.score = survivors[best].score;
  result.doc.tokens[pos] = survivors[best].candidate.surface;
  if (survivors[best].candidate.kind == CandidateKind::kVisual) result.doc.perturbed_mask[pos] = true;

  // Reported pool: drop the lowest-scoring semantic survivors first, then
  // visual ones, until it fits in pool_size. The winner always stays.
  std::vector<std::size_t> order(survivors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool sa = a < n_semantic, sb = b < n_semantic;
    if (sa != sb) return sa;  // semantic ones are dropped first
    return survivors[a].score < survivors[b].score;
  });
  std::vector<bool> dropped(survivors.size(), false);
  std::size_t size = survivors.size();
  for (std::size_t idx : order) {
    if (size <= ctx.pool_size) break;
    if (idx == best) continue;
    dropped[idx] = true;
    --size;
  }
  result.pool.position = pos;
  result.pool.original = doc.tokens[pos];
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    if (!dropped[i]) result.pool.candidates.push_back(survivors[i].candidate);
  }
  return result;
}

}  // namespace attrshield::cand
