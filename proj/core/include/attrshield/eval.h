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

// Batch attacks, summary metrics, success CDF, transferability and report
// serialization.

#ifndef ATTRSHIELD_EVAL_H_
#define ATTRSHIELD_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "attrshield/attack.h"
#include "attrshield/classifier.h"
#include "attrshield/corpus.h"

namespace attrshield::eval {

using corpus::TokenizedDocument;

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "origin_id,label,success,word_diff,m,ptb_rate,generations,ms";

struct BatchOptions {
  // Attack every correctly classified document instead of a random sample.
  bool attack_all = false;
  double sample_fraction = 0.5;
  std::size_t workers = 1;
  // When false, wall times are reported as 0 so reruns are byte-identical.
  bool record_timing = true;
};

struct InstanceRow {
  std::uint64_t origin_id = 0;
  int label = 0;
  bool success = false;
  int word_diff = 0;
  std::size_t m = 0;
  double ptb_rate = 0.0;
  int generations = 0;
  double ms = 0.0;
};

struct MetricsReport {
  std::size_t test_size = 0;
  std::size_t correct = 0;
  std::size_t attacked = 0;
  std::size_t successes = 0;
  double clean_accuracy = 0.0;
  double post_attack_accuracy = 0.0;
  // 0 with success_rate_defined == false when nothing was attacked.
  double success_rate = 0.0;
  bool success_rate_defined = false;
  // Perturbation-rate statistics are over successful attacks only.
  double median_ptb_rate = 0.0;
  double mean_ptb_rate = 0.0;
  double mean_generations = 0.0;
  double mean_ms = 0.0;

  std::vector<InstanceRow> rows;
  // Parallel to rows.
  std::vector<attack::AttackOutcome> outcomes;
  std::vector<TokenizedDocument> originals;
};

// Summary statistics from per-instance rows. test_size and correct are
// needed for the accuracy figures.
MetricsReport Summarize(std::vector<InstanceRow> rows, std::size_t test_size, std::size_t correct);

// Attacks the correctly classified documents of `test` (all of them, or a
// seeded random sample) and summarizes the outcomes. Throws
// std::invalid_argument for an empty test set.
MetricsReport RunAttackBatch(const attack::Attacker& attacker,
                             const std::vector<TokenizedDocument>& test,
                             const BatchOptions& options = {});

// Fraction of attacked documents that succeeded within each word budget.
std::vector<std::pair<int, double>> SuccessCdf(const MetricsReport& report,
                                               const std::vector<int>& epsilons);

struct TransferMatrix {
  std::vector<std::string> models;
  // cells[i][j]: share of texts crafted against model i that model j
  // misclassifies (argmax != true label).
  std::vector<std::vector<double>> cells;
  // Successful adversarial texts per source model.
  std::vector<std::size_t> crafted;
  std::vector<double> source_success_rate;
};

// Crafts adversarial texts against every model and scores each of them on
// every other model. Models must share the classifier embedding table.
// Throws std::invalid_argument with fewer than two models.
TransferMatrix ComputeTransferMatrix(const std::vector<const clf::TextClassifier*>& models,
                                     const std::vector<std::string>& names,
                                     const std::vector<TokenizedDocument>& docs,
                                     const emb::EmbeddingTable& cand_table,
                                     const lm::NgramModel* lm, const attack::AttackConfig& cfg,
                                     const BatchOptions& options = {});

// Report JSON: schema version, config, summary metrics and one object per
// attacked document.
std::string ReportJson(const MetricsReport& report, const attack::AttackConfig& cfg,
                       const corpus::LabelSet& labels, const std::string& extra_json = "{}");
std::string TransferJson(const TransferMatrix& matrix);

void WriteCsv(const std::filesystem::path& path, const std::vector<InstanceRow>& rows);
std::vector<InstanceRow> ReadCsv(const std::filesystem::path& path);

std::string ConfigJson(const attack::AttackConfig& cfg);
// Applies the fields present in a JSON object onto `cfg`. Malformed JSON,
// unknown fields, wrong types and out-of-range values all throw
// std::invalid_argument.
attack::AttackConfig ConfigFromJson(const std::string& json, attack::AttackConfig cfg = {});

void WriteText(const std::filesystem::path& path, const std::string& text);

}  // namespace attrshield::eval

#endif  // ATTRSHIELD_EVAL_H_
