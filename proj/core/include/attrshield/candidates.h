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

// Replacement candidates for a single word and the one-word perturbation
// step built on top of them.

#ifndef ATTRSHIELD_CANDIDATES_H_
#define ATTRSHIELD_CANDIDATES_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrshield/classifier.h"
#include "attrshield/corpus.h"
#include "attrshield/embeddings.h"
#include "attrshield/ngram_lm.h"
#include "attrshield/rng.h"

namespace attrshield::cand {

using corpus::TokenizedDocument;

enum class CandidateKind { kSemantic, kVisual };

enum class VisualTransform { kInsert, kRemove, kSwap, kSubstitute, kLeet };

const char* TransformName(VisualTransform t);

struct WordCandidate {
  std::string surface;
  CandidateKind kind = CandidateKind::kSemantic;
  // Embedding distance for semantic candidates.
  double distance = 0.0;
  // Set for visual candidates.
  std::optional<VisualTransform> transform;

  std::string Provenance() const;
};

struct CandidatePool {
  std::size_t position = 0;
  std::string original;
  std::vector<WordCandidate> candidates;
};

// Character / substring substitutions with visually or aurally similar
// digits. Entries are tried longest key first, then in insertion order.
// Single-character keys only rewrite interior characters; longer keys are
// slang rewrites and may touch the word's edges ("straight" -> "str8").
class LeetMap {
 public:
  LeetMap() = default;
  explicit LeetMap(std::vector<std::pair<std::string, std::string>> entries);

  // straight -> str8, o -> 0, l -> 1, z -> 2
  static LeetMap Default();
  // JSON object `{"key": "replacement", ...}`; key order is preserved.
  static LeetMap Load(const std::filesystem::path& path);

  // Rewrites the first applicable occurrence of the highest-priority key
  // found in `word`; nothing when no key applies.
  std::optional<std::string> Apply(const std::string& word) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// In-vocabulary neighbors within eta, nearest first, at most max_n.
std::vector<WordCandidate> SemanticCandidates(const std::string& word,
                                              const emb::EmbeddingTable& table, double eta,
                                              std::size_t max_n);
std::vector<WordCandidate> SemanticCandidates(const std::string& word,
                                              const emb::NeighborCache& neighbors);

// At most one candidate per transform: insert a space or a random letter,
// remove, swap two adjacent interior characters, substitute a random letter,
// and the leet rewrite. The first four never touch the first or last
// character and need at least three characters (swap needs two distinct
// adjacent interior characters). Characters are UTF-8 code points.
std::vector<WordCandidate> VisualCandidates(const std::string& word, Rng& rng,
                                            const LeetMap& leet = LeetMap::Default());

// Everything needed to run the perturbation step against one model.
struct PerturbationContext {
  const clf::TextClassifier* model = nullptr;
  // Neighbor search over the candidate embedding space; its limit is the
  // semantic fetch budget n.
  const emb::NeighborCache* neighbors = nullptr;
  const lm::NgramModel* lm = nullptr;
  LeetMap leet = LeetMap::Default();
  std::size_t pool_size = 8;
  int max_resamples = 10;
};

// Semantic candidates (up to the fetch budget) followed by visual ones, with
// duplicate surfaces removed. No language-model filtering.
std::vector<WordCandidate> RawPool(const TokenizedDocument& doc, std::size_t position,
                                   const PerturbationContext& ctx, Rng& rng);

struct ScoredCandidate {
  WordCandidate candidate;
  // Target-class confidence with the candidate substituted.
  double score = 0.0;
  // Context fit; only meaningful for semantic candidates.
  double lm_score = 0.0;
};

struct PerturbationResult {
  TokenizedDocument doc;
  // False on the no-op path (nothing selectable or every sampled pool empty).
  bool applied = false;
  std::size_t position = 0;
  std::optional<WordCandidate> chosen;
  double score = 0.0;
  // Surviving candidates after the LM filter, capped at pool_size.
  CandidatePool pool;
};

// One mutation step: samples a position from `select_probs` (visually
// perturbed positions are never chosen), builds its candidate pool, keeps
// the top pool_size/2 semantic candidates by context fit plus all visual
// ones, and substitutes the survivor that maximizes the target-class
// confidence. Exactly one token changes unless the no-op path is taken.
PerturbationResult PerturbationSubroutine(const TokenizedDocument& doc, int target,
                                          std::span<const double> select_probs,
                                          const PerturbationContext& ctx, Rng& rng);

// Index drawn proportionally to non-negative weights; nullopt when they sum
// to zero.
std::optional<std::size_t> SampleIndex(std::span<const double> weights, Rng& rng);

}  // namespace attrshield::cand

#endif  // ATTRSHIELD_CANDIDATES_H_
