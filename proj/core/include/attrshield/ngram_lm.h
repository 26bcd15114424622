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

#ifndef ATTRSHIELD_NGRAM_LM_H_
#define ATTRSHIELD_NGRAM_LM_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "attrshield/corpus.h"

namespace attrshield::lm {

// Marker standing in for the text before the first and after the last token.
inline constexpr std::string_view kBoundary = "<s>";

// Add-k smoothed bigram model used to rank substitutes by how well they fit
// between their neighbors.
//
// P(b | a) = (count(a, b) + k) / (count(a) + k * V), where count(a) sums
// count(a, b) over word successors b and V is the number of distinct word
// types seen in training (the boundary marker is context, not an outcome).
// For any context the first factor is therefore a proper distribution over
// the V word types.
class NgramModel {
 public:
  static constexpr double kDefaultSmoothing = 0.1;

  NgramModel() = default;

  // Throws std::invalid_argument for an empty corpus or smoothing <= 0.
  [[nodiscard]] static NgramModel Fit(const std::vector<corpus::TokenizedDocument>& docs,
                                                 double smoothing = kDefaultSmoothing);

  double Probability(const std::string& next, const std::string& prev) const;
  double LogProbability(const std::string& next, const std::string& prev) const;

  // log P(cand | prev) + log P(next | cand). Pass kBoundary at text edges.
  double ContextScore(const std::string& prev, const std::string& cand,
                      const std::string& next) const;

  std::size_t BigramCount(const std::string& a, const std::string& b) const;
  std::size_t ContextCount(const std::string& a) const;
  std::size_t vocab_size() const { return vocab_size_; }
  double smoothing() const { return smoothing_; }

  void Save(const std::filesystem::path& path) const;
  static NgramModel Load(const std::filesystem::path& path);

 private:
  static std::string Key(const std::string& a, const std::string& b);

  std::unordered_map<std::string, std::size_t> bigrams_;
  std::unordered_map<std::string, std::size_t> contexts_;
  std::size_t vocab_size_ = 1;
  double smoothing_ = kDefaultSmoothing;
};

}  // namespace attrshield::lm

#endif  // ATTRSHIELD_NGRAM_LM_H_
