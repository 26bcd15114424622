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

// Synthetic planted-keyword corpora with matching embedding tables.
//
// Every document of class c carries `strong_per_doc` keywords of class c and
// `weak_per_doc` keywords of some other class; the rest is shared filler.
// Keyword vectors sit on a per-class axis (strong ones further out), filler
// vectors live in the remaining dimensions, so the classes are linearly
// separable in mean-embedding space and hiding the strong keywords flips the
// label. Each corpus word also gets `synonyms_per_word` out-of-corpus
// neighbors at `synonym_distance`.

#ifndef ATTRSHIELD_PLANTED_H_
#define ATTRSHIELD_PLANTED_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <memory>

#include "attrshield/classifier.h"
#include "attrshield/corpus.h"
#include "attrshield/embeddings.h"
#include "attrshield/ngram_lm.h"

namespace attrshield::planted {

struct PlantedOptions {
  std::size_t num_docs = 500;
  std::vector<std::string> class_names = {"north", "south"};
  std::size_t dim = 16;
  std::size_t fillers = 80;
  std::size_t keywords_per_class = 12;
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  std::size_t strong_per_doc = 1;
  std::size_t weak_per_doc = 1;
  // Offsets along the class axis.
  double strong_offset = 3.0;
  double weak_offset = 1.5;
  // Norm of the component outside the class axes.
  double spread = 1.0;
  std::size_t synonyms_per_word = 1;
  double synonym_distance = 0.3;
  std::uint64_t seed = 7;
};

struct PlantedCorpus {
  std::vector<corpus::RawRecord> records;
  corpus::LabelSet labels;
  emb::EmbeddingTable table;
  // Indexed by class id.
  std::vector<std::vector<std::string>> strong;
  std::vector<std::vector<std::string>> weak;
  std::vector<std::string> fillers;
};

PlantedCorpus MakePlantedCorpus(const PlantedOptions& options);

// A planted corpus split, a surrogate trained on it and a bigram model fitted
// to the training side. The fixture embedding table doubles as the
// candidate table.
struct PlantedBenchmark {
  PlantedCorpus corpus;
  std::shared_ptr<const emb::EmbeddingTable> table;
  corpus::DatasetSplit split;
  std::unique_ptr<clf::TextClassifier> model;
  clf::TrainReport report;
  lm::NgramModel lm;
};

PlantedBenchmark MakePlantedBenchmark(const PlantedOptions& options,
                                      const clf::TrainConfig& train = {},
                                      clf::Arch arch = clf::Arch::kBoe, double train_ratio = 0.8);

// Long documents with a small gap between strong and weak keywords, used
// to compare importance-guided and uniform position sampling.
PlantedOptions LongDocumentOptions();

}  // namespace attrshield::planted

#endif  // ATTRSHIELD_PLANTED_H_
