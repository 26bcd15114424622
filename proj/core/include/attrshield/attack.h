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

// Word importance, population search and baselines for crafting
// attribute-obfuscating texts.

#ifndef ATTRSHIELD_ATTACK_H_
#define ATTRSHIELD_ATTACK_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attrshield/candidates.h"
#include "attrshield/classifier.h"
#include "attrshield/corpus.h"
#include "attrshield/embeddings.h"
#include "attrshield/ngram_lm.h"
#include "attrshield/rng.h"

namespace attrshield::attack {

using corpus::TokenizedDocument;

enum class Strategy { kAdv4sg, kGeneticRandom, kGreedy };

std::string StrategyName(Strategy s);
Strategy ParseStrategy(const std::string& name);

struct AttackConfig {
  int population_size = 40;
  int max_iterations = 10;
  double epsilon_rate = 0.25;
  double eta = 0.5;
  std::size_t pool_size = 8;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::kAdv4sg;
  // Absolute word budget; overrides epsilon_rate when set (may be 0).
  std::optional<int> max_perturbations;
  int max_resamples = 10;

  // Word budget for a text of m tokens: max(1, floor(epsilon_rate * m)),
  // unless max_perturbations is set.
  int Epsilon(std::size_t m) const;
  // Throws std::invalid_argument on out-of-range fields.
  void Validate() const;
};

struct ImportanceProfile {
  std::vector<double> saliency;
  std::vector<double> variance;
  std::vector<double> importance;
  // Softmax of importance over positions that are not visually perturbed;
  // perturbed positions get exactly 0.
  std::vector<double> selection_probs;
};

// Softmax restricted to positions where mask is false. All zeros when
// every position is masked.
std::vector<double> MaskedSoftmax(const std::vector<double>& scores, const std::vector<bool>& mask);

// Saliency is the L2 norm of d l_y / d w_i; variance is the largest drop of
// l_y over the position's unfiltered candidate pool (0 when empty).
ImportanceProfile WordImportance(const TokenizedDocument& doc, int label,
                                 const cand::PerturbationContext& ctx, Rng& rng);

// Uniform over positions that are not visually perturbed.
std::vector<double> UniformSelection(const TokenizedDocument& doc);

// Highest-scoring class other than `label` (ties to the lowest id).
// Throws std::invalid_argument with fewer than two classes.
int ChooseTarget(const clf::PredictionScores& scores, int label);
int ChooseTarget(const clf::TextClassifier& model, const TokenizedDocument& doc, int label);

// Positionwise uniform choice between parents; the child's mask follows the
// parent each token came from. Throws std::invalid_argument on a length
// mismatch.
TokenizedDocument Crossover(const TokenizedDocument& a, const TokenizedDocument& b, Rng& rng);

// Number of positions whose surfaces differ. Throws std::invalid_argument on
// a length mismatch.
int WordDiff(const TokenizedDocument& a, const TokenizedDocument& b);

// One substitution applied at a position during the search.
struct Edit {
  std::string from;
  std::string to;
  cand::CandidateKind kind = cand::CandidateKind::kSemantic;
  std::optional<cand::VisualTransform> transform;
  double distance = 0.0;
};

struct PositionEdits {
  std::size_t position = 0;
  // In application order; the first edit starts at the original token.
  std::vector<Edit> edits;
};

struct AttackOutcome {
  std::uint64_t origin_id = 0;
  int label = 0;
  int target = 0;
  int epsilon = 0;
  bool success = false;
  std::optional<TokenizedDocument> adversarial;
  std::vector<std::size_t> positions;
  std::vector<PositionEdits> edits;
  int word_diff = 0;
  // Generations evaluated (population strategies) or subroutine calls
  // (greedy).
  int generations = 0;
  std::size_t subroutine_calls = 0;
  // Confidences of the returned text, or of the best text found on failure.
  clf::PredictionScores scores;
  // Elite fitness per evaluated generation.
  std::vector<double> fitness_trace;
  double ms = 0.0;
};

// Holds the candidate-search state shared by every attack on one model.
// Thread-safe for concurrent Run calls.
class Attacker {
 public:
  // `cand_table` is searched for semantic candidates; it may be the model's
  // own table. `lm` may be null (no context filtering).
  Attacker(const clf::TextClassifier& model, const emb::EmbeddingTable& cand_table,
           const lm::NgramModel* lm, AttackConfig cfg,
           cand::LeetMap leet = cand::LeetMap::Default());

  const AttackConfig& config() const { return cfg_; }
  const clf::TextClassifier& model() const { return *ctx_.model; }
  const cand::PerturbationContext& context() const { return ctx_; }

  // Runs the configured strategy. The rng stream is derived from
  // (seed, doc.origin_id), so results do not depend on call order.
  AttackOutcome Run(const TokenizedDocument& doc) const;
  AttackOutcome Run(const TokenizedDocument& doc, Strategy strategy) const;

  AttackOutcome Adv4sg(const TokenizedDocument& doc) const { return Run(doc, Strategy::kAdv4sg); }
  AttackOutcome GeneticRandom(const TokenizedDocument& doc) const {
    return Run(doc, Strategy::kGeneticRandom);
  }
  AttackOutcome Greedy(const TokenizedDocument& doc) const { return Run(doc, Strategy::kGreedy); }

 private:
  AttackOutcome Population(const TokenizedDocument& doc, bool guided) const;
  AttackOutcome GreedySearch(const TokenizedDocument& doc) const;

  AttackConfig cfg_;
  std::unique_ptr<emb::NeighborCache> neighbors_;
  cand::PerturbationContext ctx_;
};

// Re-checks an outcome against its original text: on success the text must
// be misclassified (margin < 0), stay within the word budget, keep the token
// count, and every recorded edit must be a legal candidate (semantic within
// eta, interior-only visual edits). Returns an empty string when valid,
// otherwise a description of the first violation.
std::string ValidateOutcome(const AttackOutcome& outcome, const TokenizedDocument& original,
                            const clf::TextClassifier& model,
                            const emb::EmbeddingTable& cand_table, double eta);

}  // namespace attrshield::attack

#endif  // ATTRSHIELD_ATTACK_H_
