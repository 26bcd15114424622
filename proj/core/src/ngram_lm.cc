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

#include "attrshield/ngram_lm.h"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace attrshield::lm {

std::string NgramModel::Key(const std::string& a, const std::string& b) {
  std::string k;
  k.reserve(a.size() + b.size() + 1);
  k += a;
  k.push_back('\x1f');
  k += b;
  return k;
}

NgramModel NgramModel::Fit(const std::vector<corpus::TokenizedDocument>& docs, double smoothing) {
  if (docs.empty()) throw std::invalid_argument("empty corpus");
  if (!(smoothing > 0.0)) throw std::invalid_argument("smoothing must be > 0");
  NgramModel m;
  m.smoothing_ = smoothing;
  std::unordered_set<std::string> types;
  const std::string boundary(kBoundary);
  for (const auto& d : docs) {
    const std::string* prev = &boundary;
    for (const auto& tok : d.tokens) {
      ++m.bigrams_[Key(*prev, tok)];
      ++m.contexts_[*prev];
      types.insert(tok);
      prev = &tok;
    }
    // Transitions into the boundary are recorded for P(<s> | last) but do
    // not add to the context count, which ranges over word successors only.
    if (!d.tokens.empty()) ++m.bigrams_[Key(*prev, boundary)];
  }
  m.vocab_size_ = std::max<std::size_t>(1, types.size());
  return m;
}

std::size_t NgramModel::BigramCount(const std::string& a, const std::string& b) const {
  auto it = bigrams_.find(Key(a, b));
  return it == bigrams_.end() ? 0 : it->second;
}

std::size_t NgramModel::ContextCount(const std::string& a) const {
  auto it = contexts_.find(a);
  return it == contexts_.end() ? 0 : it->second;
}

double NgramModel::Probability(const std::string& next, const std::string& prev) const {
  return (static_cast<double>(BigramCount(prev, next)) + smoothing_) /
         (static_cast<double>(ContextCount(prev)) +
          smoothing_ * static_cast<double>(vocab_size_));
}

double NgramModel::LogProbability(const std::string& next, const std::string& prev) const {
  return std::log(Probability(next, prev));
}

double NgramModel::ContextScore(const std::string& prev, const std::string& cand,
                                const std::string& next) const {
  return LogProbability(cand, prev) + LogProbability(next, cand);
}

void NgramModel::Save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "attrshield-bigram";
  j["version"] = 1;
  j["smoothing"] = smoothing_;
  j["vocab_size"] = vocab_size_;
  // Sorted maps keep the sidecar byte-stable.
  std::map<std::string, std::size_t> contexts(contexts_.begin(), contexts_.end());
  nlohmann::json bigrams = nlohmann::json::array();
  std::map<std::string, std::size_t> sorted(bigrams_.begin(), bigrams_.end());
  for (const auto& [key, n] : sorted) {
    const auto sep = key.find('\x1f');
    bigrams.push_back({key.substr(0, sep), key.substr(sep + 1), n});
  }
  j["contexts"] = contexts;
  j["bigrams"] = bigrams;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

NgramModel NgramModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read language model: " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("format") != "attrshield-bigram") throw std::runtime_error("not a bigram sidecar");
    NgramModel m;
    m.smoothing_ = j.at("smoothing").get<double>();
    m.vocab_size_ = j.at("vocab_size").get<std::size_t>();
    for (auto& [k, v] : j.at("contexts").items()) m.contexts_[k] = v.get<std::size_t>();
    for (const auto& row : j.at("bigrams")) {
      m.bigrams_[Key(row.at(0).get<std::string>(), row.at(1).get<std::string>())] =
          row.at(2).get<std::size_t>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed language model " + path.string() + ": " + e.what());
  }
}

}  // namespace attrshield::lm
