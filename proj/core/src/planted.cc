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

#include "attrshield/planted.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "attrshield/rng.h"

namespace attrshield::planted {
namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "m", "n", "p", "r", "s", "t", "v", "w",
                                   "br", "dr", "gr", "kr", "pr", "st", "tr", "sh", "ch"};
constexpr const char* kVowels[] = {"a", "e", "i", "u", "ai", "ea", "ou"};

std::string MakeWord(Rng& rng, std::unordered_set<std::string>& used) {
  for (;;) {
    std::string w;
    const std::size_t syllables = 2 + UniformIndex(rng, 2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kOnsets[UniformIndex(rng, std::size(kOnsets))];
      w += kVowels[UniformIndex(rng, std::size(kVowels))];
    }
    w += kOnsets[UniformIndex(rng, 13)];
    if (used.insert(w).second) return w;
  }
}

double Gaussian(Rng& rng) {
  // Box-Muller; keeps the stream independent of the standard library.
  const double u1 = std::max(UniformUnit(rng), 1e-300);
  const double u2 = UniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Random direction restricted to dims [first, dim), scaled to `norm`.
std::vector<double> FreeVector(std::size_t dim, std::size_t first, double norm, Rng& rng) {
  std::vector<double> v(dim, 0.0);
  double sq = 0.0;
  for (std::size_t i = first; i < dim; ++i) {
    v[i] = Gaussian(rng);
    sq += v[i] * v[i];
  }
  const double s = sq > 0.0 ? norm / std::sqrt(sq) : 0.0;
  for (double& x : v) x *= s;
  return v;
}

}  // namespace

PlantedCorpus MakePlantedCorpus(const PlantedOptions& o) {
  // Sorted, so ids agree with LabelSet::FromRecords on the written corpus.
  std::vector<std::string> names = o.class_names;
  std::sort(names.begin(), names.end());
  const std::size_t classes = names.size();
  if (classes < 2) throw std::invalid_argument("need >=2 classes");
  if (o.dim <= classes) throw std::invalid_argument("dim must exceed the number of classes");
  if (o.min_len < o.strong_per_doc + o.weak_per_doc || o.max_len < o.min_len) {
    throw std::invalid_argument("document length range cannot hold the keywords");
  }

  Rng rng = MakeRng(o.seed, {0x91a7});
  PlantedCorpus pc;
  pc.labels = corpus::LabelSet(names);
  pc.table = emb::EmbeddingTable(o.dim);
  pc.strong.resize(classes);
  pc.weak.resize(classes);
  std::unordered_set<std::string> used;

  std::vector<std::pair<std::string, std::vector<double>>> words;
  auto add_word = [&](std::vector<double> v) {
    std::string w = MakeWord(rng, used);
    words.emplace_back(w, std::move(v));
    return w;
  };
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < o.keywords_per_class; ++k) {
      auto v = FreeVector(o.dim, classes, o.spread, rng);
      v[c] = o.strong_offset;
      pc.strong[c].push_back(add_word(std::move(v)));
    }
    for (std::size_t k = 0; k < o.keywords_per_class; ++k) {
      auto v = FreeVector(o.dim, classes, o.spread, rng);
      v[c] = o.weak_offset;
      pc.weak[c].push_back(add_word(std::move(v)));
    }
  }
  for (std::size_t f = 0; f < o.fillers; ++f) {
    pc.fillers.push_back(add_word(FreeVector(o.dim, classes, o.spread, rng)));
  }

  const std::size_t corpus_words = words.size();
  for (std::size_t i = 0; i < corpus_words; ++i) {
    for (std::size_t s = 0; s < o.synonyms_per_word; ++s) {
      auto v = words[i].second;
      const auto d = FreeVector(o.dim, classes, o.synonym_distance, rng);
      for (std::size_t k = 0; k < o.dim; ++k) v[k] += d[k];
      add_word(std::move(v));
    }
  }
  for (const auto& [w, v] : words) pc.table.Add(w, v);

  for (std::size_t n = 0; n < o.num_docs; ++n) {
    const std::size_t c = UniformIndex(rng, classes);
    const std::size_t m = o.min_len + UniformIndex(rng, o.max_len - o.min_len + 1);
    std::vector<std::string> toks;
    for (std::size_t k = 0; k < o.strong_per_doc; ++k) {
      toks.push_back(pc.strong[c][UniformIndex(rng, o.keywords_per_class)]);
    }
    for (std::size_t k = 0; k < o.weak_per_doc; ++k) {
      std::size_t other = UniformIndex(rng, classes - 1);
      if (other >= c) ++other;
      toks.push_back(pc.weak[other][UniformIndex(rng, o.keywords_per_class)]);
    }
    while (toks.size() < m) toks.push_back(pc.fillers[UniformIndex(rng, pc.fillers.size())]);
    for (std::size_t i = toks.size() - 1; i > 0; --i) {
      std::swap(toks[i], toks[UniformIndex(rng, i + 1)]);
    }
    std::string text;
    for (const auto& t : toks) {
      if (!text.empty()) text.push_back(' ');
      text += t;
    }
    pc.records.push_back({names[c], std::move(text)});
  }
  return pc;
}

PlantedBenchmark MakePlantedBenchmark(const PlantedOptions& options, const clf::TrainConfig& train,
                                      clf::Arch arch, double train_ratio) {
  PlantedBenchmark b;
  b.corpus = MakePlantedCorpus(options);
  b.table = std::make_shared<const emb::EmbeddingTable>(b.corpus.table);
  auto docs = corpus::MakeDocuments(b.corpus.records, b.corpus.labels, corpus::kDefaultMaxLen);
  b.split = corpus::Split(docs.docs, train_ratio, options.seed);
  b.model = clf::MakeModel(arch, b.table, b.corpus.labels.names());
  b.report = clf::Train(*b.model, b.split, train);
  b.lm = lm::NgramModel::Fit(b.split.train);
  return b;
}

PlantedOptions LongDocumentOptions() {
  PlantedOptions o;
  o.strong_offset = 1.5;
  o.weak_offset = 1.1;
  o.spread = 0.2;
  o.min_len = 50;
  o.max_len = 80;
  return o;
}

}  // namespace attrshield::planted
