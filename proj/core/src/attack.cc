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

#include "attrshield/attack.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace attrshield::attack {
namespace {

// Stream tags for DeriveSeed paths.
constexpr std::uint64_t kImportanceStream = 0x1a;
constexpr std::uint64_t kSamplingStream = 0xc0;
constexpr std::uint64_t kMemberStream = 0x3e;
constexpr std::uint64_t kGreedyStream = 0x67;

// A population member together with the edits that produced each token.
struct Member {
  TokenizedDocument doc;
  std::vector<std::vector<Edit>> history;
};

Member Seed(const TokenizedDocument& doc) { return {doc, std::vector<std::vector<Edit>>(doc.size())}; }

std::vector<bool> CoinFlips(std::size_t n, Rng& rng) {
  std::vector<bool> take_b(n);
  for (std::size_t i = 0; i < n; ++i) take_b[i] = UniformUnit(rng) < 0.5;
  return take_b;
}

Member CrossMembers(const Member& a, const Member& b, Rng& rng) {
  if (a.doc.size() != b.doc.size()) throw std::invalid_argument("crossover length mismatch");
  const auto take_b = CoinFlips(a.doc.size(), rng);
  Member child = a;
  for (std::size_t i = 0; i < take_b.size(); ++i) {
    if (!take_b[i]) continue;
    child.doc.tokens[i] = b.doc.tokens[i];
    child.doc.perturbed_mask[i] = b.doc.perturbed_mask[i];
    child.history[i] = b.history[i];
  }
  return child;
}

Member Mutate(const Member& m, int target, const std::vector<double>& probs,
              const cand::PerturbationContext& ctx, Rng& rng, std::size_t& calls) {
  ++calls;
  auto r = cand::PerturbationSubroutine(m.doc, target, probs, ctx, rng);
  Member out{std::move(r.doc), m.history};
  if (r.applied) {
    Edit e;
    e.from = m.doc.tokens[r.position];
    e.to = r.chosen->surface;
    e.kind = r.chosen->kind;
    e.transform = r.chosen->transform;
    e.distance = r.chosen->distance;
    out.history[r.position].push_back(std::move(e));
  }
  return out;
}

void Finish(AttackOutcome& out, const TokenizedDocument& original, const Member& best,
            const clf::PredictionScores& scores, bool success) {
  out.success = success;
  out.scores = scores;
  out.word_diff = WordDiff(original, best.doc);
  out.positions.clear();
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original.tokens[i] != best.doc.tokens[i]) out.positions.push_back(i);
  }
  out.edits.clear();
  for (std::size_t i = 0; i < best.history.size(); ++i) {
    if (!best.history[i].empty()) out.edits.push_back({i, best.history[i]});
  }
  if (success) out.adversarial = best.doc;
}

}  // namespace

std::string StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kAdv4sg: return "adv4sg";
    case Strategy::kGeneticRandom: return "genetic_random";
    case Strategy::kGreedy: return "greedy";
  }
  return "?";
}

Strategy ParseStrategy(const std::string& name) {
  if (name == "adv4sg") return Strategy::kAdv4sg;
  if (name == "genetic_random") return Strategy::kGeneticRandom;
  if (name == "greedy") return Strategy::kGreedy;
  throw std::invalid_argument("unknown strategy: " + name);
}

int AttackConfig::Epsilon(std::size_t m) const {
  if (max_perturbations) return *max_perturbations;
  return std::max(1, static_cast<int>(std::floor(epsilon_rate * static_cast<double>(m))));
}

void AttackConfig::Validate() const {
  if (population_size < 1) throw std::invalid_argument("population_size must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(epsilon_rate > 0.0 && epsilon_rate <= 1.0)) {
    throw std::invalid_argument("epsilon_rate must be in (0, 1]");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (pool_size < 1) throw std::invalid_argument("pool_size must be >= 1");
  if (max_perturbations && *max_perturbations < 0) {
    throw std::invalid_argument("max_perturbations must be >= 0");
  }
  if (max_resamples < 0) throw std::invalid_argument("max_resamples must be >= 0");
}

std::vector<double> MaskedSoftmax(const std::vector<double>& scores, const std::vector<bool>& mask) {
  std::vector<double> out(scores.size(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) mx = std::max(mx, scores[i]);
  }
  if (!std::isfinite(mx)) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) continue;
    out[i] = std::exp(scores[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

ImportanceProfile WordImportance(const TokenizedDocument& doc, int label,
                                 const cand::PerturbationContext& ctx, Rng& rng) {
  const auto& model = *ctx.model;
  const std::size_t m = doc.size();
  ImportanceProfile p;
  p.saliency.assign(m, 0.0);
  p.variance.assign(m, 0.0);
  p.importance.assign(m, 0.0);

  clf::EncodedDocument x = clf::Encode(doc, model.embeddings());
  const auto grads = model.InputGradientsEncoded(x, label);
  const double base = model.PredictEncoded(x)[label];
  std::vector<double> saved(x.dim);
  for (std::size_t i = 0; i < m; ++i) {
    if (doc.perturbed_mask[i]) continue;
    double sq = 0.0;
    for (double g : grads.row(i)) sq += g * g;
    p.saliency[i] = std::sqrt(sq);

    const auto pool = cand::RawPool(doc, i, ctx, rng);
    if (!pool.empty()) {
      std::copy(x.row(i).begin(), x.row(i).end(), saved.begin());
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& c : pool) {
        const auto v = model.embeddings().Lookup(c.surface);
        std::copy(v.begin(), v.end(), x.row(i).begin());
        best = std::max(best, base - model.PredictEncoded(x)[label]);
      }
      std::copy(saved.begin(), saved.end(), x.row(i).begin());
      p.variance[i] = best;
    }
    p.importance[i] = p.saliency[i] * p.variance[i];
  }
  p.selection_probs = MaskedSoftmax(p.importance, doc.perturbed_mask);
  return p;
}

std::vector<double> UniformSelection(const TokenizedDocument& doc) {
  return MaskedSoftmax(std::vector<double>(doc.size(), 0.0), doc.perturbed_mask);
}

int ChooseTarget(const clf::PredictionScores& scores, int label) {
  if (scores.num_classes() < 2) throw std::invalid_argument("need >=2 classes");
  int best = -1;
  for (int c = 0; c < scores.num_classes(); ++c) {
    if (c == label) continue;
    if (best < 0 || scores[c] > scores[best]) best = c;
  }
  return best;
}

int ChooseTarget(const clf::TextClassifier& model, const TokenizedDocument& doc, int label) {
  return ChooseTarget(model.Predict(doc), label);
}

TokenizedDocument Crossover(const TokenizedDocument& a, const TokenizedDocument& b, Rng& rng) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover length mismatch");
  const auto take_b = CoinFlips(a.size(), rng);
  TokenizedDocument child = a;
  for (std::size_t i = 0; i < take_b.size(); ++i) {
    if (!take_b[i]) continue;
    child.tokens[i] = b.tokens[i];
    child.perturbed_mask[i] = b.perturbed_mask[i];
  }
  return child;
}

int WordDiff(const TokenizedDocument& a, const TokenizedDocument& b) {
  if (a.size() != b.size()) throw std::invalid_argument("word_diff length mismatch");
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a.tokens[i] != b.tokens[i];
  return n;
}

// ---------------------------------------------------------------------------
// Attacker

Attacker::Attacker(const clf::TextClassifier& model, const emb::EmbeddingTable& cand_table,
                   const lm::NgramModel* lm, AttackConfig cfg, cand::LeetMap leet)
    : cfg_(std::move(cfg)) {
  cfg_.Validate();
  neighbors_ = std::make_unique<emb::NeighborCache>(cand_table, cfg_.eta, cfg_.pool_size);
  ctx_.model = &model;
  ctx_.neighbors = neighbors_.get();
  ctx_.lm = lm;
  ctx_.leet = std::move(leet);
  ctx_.pool_size = cfg_.pool_size;
  ctx_.max_resamples = cfg_.max_resamples;
}

AttackOutcome Attacker::Run(const TokenizedDocument& doc) const { return Run(doc, cfg_.strategy); }

AttackOutcome Attacker::Run(const TokenizedDocument& doc, Strategy strategy) const {
  const auto start = std::chrono::steady_clock::now();
  AttackOutcome out;
  out.origin_id = doc.origin_id;
  out.label = doc.label_id;
  out.epsilon = cfg_.Epsilon(doc.size());

  const auto scores = ctx_.model->Predict(doc);
  out.target = ChooseTarget(scores, doc.label_id);
  if (out.epsilon <= 0) {
    Finish(out, doc, Seed(doc), scores, false);
  } else if (clf::Margin(scores, doc.label_id) < 0.0) {
    // Already misclassified: nothing to do.
    Finish(out, doc, Seed(doc), scores, true);
  } else if (strategy == Strategy::kGreedy) {
    out = GreedySearch(doc);
  } else {
    out = Population(doc, strategy == Strategy::kAdv4sg);
  }
  out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

AttackOutcome Attacker::Population(const TokenizedDocument& doc, bool guided) const {
  const auto& model = *ctx_.model;
  const int y = doc.label_id;
  const std::size_t n = static_cast<std::size_t>(cfg_.population_size);

  AttackOutcome out;
  out.origin_id = doc.origin_id;
  out.label = y;
  out.epsilon = cfg_.Epsilon(doc.size());
  out.target = ChooseTarget(model.Predict(doc), y);
  const int target = out.target;

  std::vector<double> probs;
  if (guided) {
    Rng rng = MakeRng(cfg_.seed, {doc.origin_id, kImportanceStream});
    probs = WordImportance(doc, y, ctx_, rng).selection_probs;
  } else {
    probs = UniformSelection(doc);
  }

  const Member root = Seed(doc);
  std::vector<Member> population;
  population.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = MakeRng(cfg_.seed, {doc.origin_id, kMemberStream, 0, i});
    population.push_back(Mutate(root, target, probs, ctx_, rng, out.subroutine_calls));
  }

  std::vector<double> fitness(n);
  std::vector<clf::PredictionScores> scores(n);
  for (int t = 1; t <= cfg_.max_iterations; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = model.Predict(population[i].doc);
      fitness[i] = scores[i][target];
    }
    const std::size_t elite =
        static_cast<std::size_t>(std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
    out.fitness_trace.push_back(fitness[elite]);
    out.generations = t;

    const Member& best = population[elite];
    if (WordDiff(doc, best.doc) >= out.epsilon) {
      Finish(out, doc, best, scores[elite], false);
      return out;
    }
    if (clf::Margin(scores[elite], y) < 0.0) {
      Finish(out, doc, best, scores[elite], true);
      return out;
    }
    if (t == cfg_.max_iterations) {
      Finish(out, doc, best, scores[elite], false);
      return out;
    }

    Rng sampler = MakeRng(cfg_.seed, {doc.origin_id, kSamplingStream, static_cast<std::uint64_t>(t)});
    std::vector<Member> next;
    next.reserve(n);
    next.push_back(best);
    for (std::size_t i = 1; i < n; ++i) {
      const std::size_t a = cand::SampleIndex(fitness, sampler).value_or(UniformIndex(sampler, n));
      const std::size_t b = cand::SampleIndex(fitness, sampler).value_or(UniformIndex(sampler, n));
      Rng rng = MakeRng(cfg_.seed, {doc.origin_id, kMemberStream, static_cast<std::uint64_t>(t), i});
      Member child = CrossMembers(population[a], population[b], rng);
      next.push_back(Mutate(child, target, probs, ctx_, rng, out.subroutine_calls));
    }
    population = std::move(next);
  }
  return out;  // unreachable: max_iterations >= 1
}

AttackOutcome Attacker::GreedySearch(const TokenizedDocument& doc) const {
  const auto& model = *ctx_.model;
  const int y = doc.label_id;
  AttackOutcome out;
  out.origin_id = doc.origin_id;
  out.label = y;
  out.epsilon = cfg_.Epsilon(doc.size());
  auto cur_scores = model.Predict(doc);
  out.target = ChooseTarget(cur_scores, y);
  const int target = out.target;

  Rng rng = MakeRng(cfg_.seed, {doc.origin_id, kGreedyStream});
  const auto probs = WordImportance(doc, y, ctx_, rng).selection_probs;

  Member cur = Seed(doc);
  const auto budget = static_cast<std::size_t>(cfg_.population_size) *
                      static_cast<std::size_t>(cfg_.max_iterations);
  while (out.subroutine_calls < budget) {
    Member cand = Mutate(cur, target, probs, ctx_, rng, out.subroutine_calls);
    out.generations = static_cast<int>(out.subroutine_calls);
    if (WordDiff(cand.doc, cur.doc) == 0) {
      // No-op: stop once nothing is selectable any more.
      bool selectable = false;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        selectable |= probs[i] > 0.0 && !cur.doc.perturbed_mask[i];
      }
      if (!selectable) break;
      continue;
    }
    const auto scores = model.Predict(cand.doc);
    out.fitness_trace.push_back(scores[target]);
    if (scores[target] <= cur_scores[target]) continue;
    cur = std::move(cand);
    cur_scores = scores;
    if (WordDiff(doc, cur.doc) >= out.epsilon) {
      Finish(out, doc, cur, cur_scores, false);
      return out;
    }
    if (clf::Margin(cur_scores, y) < 0.0) {
      Finish(out, doc, cur, cur_scores, true);
      return out;
    }
  }
  Finish(out, doc, cur, cur_scores, false);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::vector<std::string> Chars(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
    n = std::min(n, s.size() - i);
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

}  // namespace

std::string ValidateOutcome(const AttackOutcome& outcome, const TokenizedDocument& original,
                            const clf::TextClassifier& model,
                            const emb::EmbeddingTable& cand_table, double eta) {
  if (!outcome.success) {
    return outcome.adversarial ? "failed outcome carries an adversarial text" : "";
  }
  if (!outcome.adversarial) return "successful outcome without adversarial text";
  const auto& adv = *outcome.adversarial;
  if (adv.size() != original.size()) return "token count changed";
  const int diff = WordDiff(original, adv);
  if (diff != outcome.word_diff) return "reported word_diff is stale";
  if (diff >= outcome.epsilon) return "word budget exceeded";
  if (!(clf::Margin(model, adv, original.label_id) < 0.0)) return "text is not misclassified";

  std::vector<bool> covered(original.size(), false);
  for (const auto& pe : outcome.edits) {
    if (pe.position >= original.size() || pe.edits.empty()) return "malformed edit record";
    covered[pe.position] = true;
    std::string cur = original.tokens[pe.position];
    for (const auto& e : pe.edits) {
      if (e.from != cur) return "edit chain is broken at position " + std::to_string(pe.position);
      if (e.to == e.from) return "edit does not change the token";
      if (e.kind == cand::CandidateKind::kSemantic) {
        if (!cand_table.Contains(e.from) || !cand_table.Contains(e.to)) {
          return "semantic edit outside the candidate vocabulary";
        }
        if (emb::Distance(cand_table, e.from, e.to) > eta) return "semantic edit beyond eta";
      } else if (e.transform != cand::VisualTransform::kLeet) {
        const auto a = Chars(e.from), b = Chars(e.to);
        if (a.size() < 3 || b.empty() || a.front() != b.front() || a.back() != b.back()) {
          return "visual edit touched the first or last character";
        }
        const auto la = static_cast<long>(a.size()), lb = static_cast<long>(b.size());
        if (std::abs(la - lb) > 1) return "visual edit changed the length by more than one";
      }
      cur = e.to;
    }
    if (cur != adv.tokens[pe.position]) return "edit chain does not end at the output token";
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original.tokens[i] != adv.tokens[i] && !covered[i]) {
      return "unexplained change at position " + std::to_string(i);
    }
  }
  return "";
}

}  // namespace attrshield::attack
