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

#include "attrshield/eval.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "attrshield/rng.h"

namespace attrshield::eval {
namespace {

using nlohmann::ordered_json;

// Shortest text that parses back to the same double.
std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad number '" + s + "' in instance csv");
  }
  return v;
}

template <typename Int>
Int ParseInt(const std::string& s) {
  Int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad integer '" + s + "' in instance csv");
  }
  return v;
}

InstanceRow RowFor(const attack::AttackOutcome& o, std::size_t m, bool timing) {
  InstanceRow r;
  r.origin_id = o.origin_id;
  r.label = o.label;
  r.success = o.success;
  r.word_diff = o.word_diff;
  r.m = m;
  r.ptb_rate = o.success && m > 0 ? static_cast<double>(o.word_diff) / static_cast<double>(m) : 0.0;
  r.generations = o.generations;
  r.ms = timing ? o.ms : 0.0;
  return r;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ordered_json EditsJson(const attack::AttackOutcome& o) {
  ordered_json arr = ordered_json::array();
  for (const auto& pe : o.edits) {
    ordered_json chain = ordered_json::array();
    for (const auto& e : pe.edits) {
      ordered_json je{{"from", e.from}, {"to", e.to},
                      {"kind", e.kind == cand::CandidateKind::kSemantic ? "semantic" : "visual"}};
      if (e.transform) je["transform"] = cand::TransformName(*e.transform);
      if (e.kind == cand::CandidateKind::kSemantic) je["distance"] = e.distance;
      chain.push_back(std::move(je));
    }
    arr.push_back({{"position", pe.position}, {"edits", std::move(chain)}});
  }
  return arr;
}

}  // namespace

MetricsReport Summarize(std::vector<InstanceRow> rows, std::size_t test_size, std::size_t correct) {
  MetricsReport r;
  r.test_size = test_size;
  r.correct = correct;
  r.attacked = rows.size();
  std::vector<double> ptb;
  double gens = 0.0;
  double ms = 0.0;
  for (const auto& row : rows) {
    if (row.success) {
      ++r.successes;
      ptb.push_back(row.ptb_rate);
      gens += row.generations;
    }
    ms += row.ms;
  }
  if (test_size > 0) {
    r.clean_accuracy = static_cast<double>(correct) / static_cast<double>(test_size);
    r.post_attack_accuracy =
        static_cast<double>(correct - r.successes) / static_cast<double>(test_size);
  }
  r.success_rate_defined = r.attacked > 0;
  if (r.attacked > 0) {
    r.success_rate = static_cast<double>(r.successes) / static_cast<double>(r.attacked);
    r.mean_ms = ms / static_cast<double>(r.attacked);
  }
  if (!ptb.empty()) {
    double sum = 0.0;
    for (double p : ptb) sum += p;
    r.mean_ptb_rate = sum / static_cast<double>(ptb.size());
    r.mean_generations = gens / static_cast<double>(ptb.size());
    std::sort(ptb.begin(), ptb.end());
    const std::size_t h = ptb.size() / 2;
    r.median_ptb_rate = ptb.size() % 2 == 1 ? ptb[h] : 0.5 * (ptb[h - 1] + ptb[h]);
  }
  r.rows = std::move(rows);
  return r;
}

MetricsReport RunAttackBatch(const attack::Attacker& attacker,
                             const std::vector<TokenizedDocument>& test,
                             const BatchOptions& options) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  if (!options.attack_all && (options.sample_fraction <= 0.0 || options.sample_fraction > 1.0)) {
    throw std::invalid_argument("sample fraction must be in (0, 1]");
  }
  const auto& model = attacker.model();
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (model.Predict(test[i]).Argmax() == test[i].label_id) correct.push_back(i);
  }

  std::vector<std::size_t> chosen = correct;
  if (!options.attack_all && !chosen.empty()) {
    Rng rng = MakeRng(attacker.config().seed, {0x5a3e});
    for (std::size_t i = chosen.size() - 1; i > 0; --i) {
      std::swap(chosen[i], chosen[UniformIndex(rng, i + 1)]);
    }
    const auto k = static_cast<std::size_t>(
        std::llround(options.sample_fraction * static_cast<double>(chosen.size())));
    chosen.resize(std::clamp<std::size_t>(k, 1, chosen.size()));
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<attack::AttackOutcome> outcomes(chosen.size());
  ParallelFor(chosen.size(), options.workers,
              [&](std::size_t i) { outcomes[i] = attacker.Run(test[chosen[i]]); });

  std::vector<InstanceRow> rows;
  rows.reserve(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    rows.push_back(RowFor(outcomes[i], test[chosen[i]].size(), options.record_timing));
    if (!options.record_timing) outcomes[i].ms = 0.0;
  }
  MetricsReport report = Summarize(std::move(rows), test.size(), correct.size());
  report.outcomes = std::move(outcomes);
  report.originals.reserve(chosen.size());
  for (std::size_t i : chosen) report.originals.push_back(test[i]);
  return report;
}

std::vector<std::pair<int, double>> SuccessCdf(const MetricsReport& report,
                                               const std::vector<int>& epsilons) {
  std::vector<std::pair<int, double>> out;
  out.reserve(epsilons.size());
  for (int e : epsilons) {
    std::size_t hit = 0;
    for (const auto& row : report.rows) {
      if (row.success && row.word_diff <= e) ++hit;
    }
    const double frac =
        report.rows.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(report.rows.size());
    out.emplace_back(e, frac);
  }
  return out;
}

TransferMatrix ComputeTransferMatrix(const std::vector<const clf::TextClassifier*>& models,
                                     const std::vector<std::string>& names,
                                     const std::vector<TokenizedDocument>& docs,
                                     const emb::EmbeddingTable& cand_table,
                                     const lm::NgramModel* lm, const attack::AttackConfig& cfg,
                                     const BatchOptions& options) {
  if (models.size() < 2) throw std::invalid_argument("transfer needs >=2 models");
  if (names.size() != models.size()) throw std::invalid_argument("one name per model required");
  TransferMatrix tm;
  tm.models = names;
  const std::size_t k = models.size();
  tm.cells.assign(k, std::vector<double>(k, 0.0));
  tm.crafted.assign(k, 0);
  tm.source_success_rate.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    attack::Attacker attacker(*models[i], cand_table, lm, cfg);
    const MetricsReport rep = RunAttackBatch(attacker, docs, options);
    tm.source_success_rate[i] = rep.success_rate;
    std::vector<const TokenizedDocument*> adv;
    for (const auto& o : rep.outcomes) {
      if (o.success && o.adversarial) adv.push_back(&*o.adversarial);
    }
    tm.crafted[i] = adv.size();
    for (std::size_t j = 0; j < k; ++j) {
      if (adv.empty()) continue;
      std::size_t fooled = 0;
      for (const auto* d : adv) {
        if (models[j]->Predict(*d).Argmax() != d->label_id) ++fooled;
      }
      tm.cells[i][j] = static_cast<double>(fooled) / static_cast<double>(adv.size());
    }
  }
  return tm;
}

std::string ConfigJson(const attack::AttackConfig& cfg) {
  ordered_json j{{"population_size", cfg.population_size},
                 {"max_iterations", cfg.max_iterations},
                 {"epsilon_rate", cfg.epsilon_rate},
                 {"eta", cfg.eta},
                 {"pool_size", cfg.pool_size},
                 {"seed", cfg.seed},
                 {"strategy", attack::StrategyName(cfg.strategy)},
                 {"max_perturbations", nullptr},
                 {"max_resamples", cfg.max_resamples}};
  if (cfg.max_perturbations) j["max_perturbations"] = *cfg.max_perturbations;
  return j.dump(2);
}

attack::AttackConfig ConfigFromJson(const std::string& text, attack::AttackConfig cfg) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const auto& v = it.value();
    try {
      if (key == "population_size") cfg.population_size = v.get<int>();
      else if (key == "max_iterations") cfg.max_iterations = v.get<int>();
      else if (key == "epsilon_rate") cfg.epsilon_rate = v.get<double>();
      else if (key == "eta") cfg.eta = v.get<double>();
      else if (key == "pool_size") cfg.pool_size = v.get<std::size_t>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "strategy") cfg.strategy = attack::ParseStrategy(v.get<std::string>());
      else if (key == "max_perturbations") {
        if (v.is_null()) cfg.max_perturbations.reset();
        else cfg.max_perturbations = v.get<int>();
      } else if (key == "max_resamples") cfg.max_resamples = v.get<int>();
      else throw std::invalid_argument("unknown config field '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config field '" + key + "': " + e.what());
    }
  }
  cfg.Validate();
  return cfg;
}

std::string ReportJson(const MetricsReport& report, const attack::AttackConfig& cfg,
                       const corpus::LabelSet& labels, const std::string& extra_json) {
  ordered_json j;
  j["format"] = "attrshield-report";
  j["version"] = kReportSchemaVersion;
  j["config"] = ordered_json::parse(ConfigJson(cfg));
  j["meta"] = ordered_json::parse(extra_json);
  j["ptb_rate_basis"] = "successes";
  ordered_json s;
  s["test_size"] = report.test_size;
  s["correct"] = report.correct;
  s["attacked"] = report.attacked;
  s["successes"] = report.successes;
  s["clean_accuracy"] = report.clean_accuracy;
  s["post_attack_accuracy"] = report.post_attack_accuracy;
  s["success_rate"] = report.success_rate;
  s["success_rate_defined"] = report.success_rate_defined;
  s["median_ptb_rate"] = report.median_ptb_rate;
  s["mean_ptb_rate"] = report.mean_ptb_rate;
  s["mean_generations"] = report.mean_generations;
  s["mean_ms"] = report.mean_ms;
  j["summary"] = std::move(s);

  ordered_json cdf = ordered_json::array();
  for (const auto& [e, f] : SuccessCdf(report, {1, 2, 3, 4, 5, 10})) {
    cdf.push_back({{"epsilon", e}, {"fraction", f}});
  }
  j["success_cdf"] = std::move(cdf);

  ordered_json inst = ordered_json::array();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    ordered_json ji{{"origin_id", row.origin_id},
                    {"label", labels.size() > row.label ? labels.Name(row.label) : std::to_string(row.label)},
                    {"success", row.success},
                    {"word_diff", row.word_diff},
                    {"m", row.m},
                    {"ptb_rate", row.ptb_rate},
                    {"generations", row.generations}};
    if (i < report.outcomes.size()) {
      const auto& o = report.outcomes[i];
      ji["epsilon"] = o.epsilon;
      ji["target"] = labels.size() > o.target ? labels.Name(o.target) : std::to_string(o.target);
      ji["scores"] = o.scores.probs;
      if (i < report.originals.size()) ji["original"] = report.originals[i].Text();
      if (o.success && o.adversarial) ji["adversarial"] = o.adversarial->Text();
      ji["edits"] = EditsJson(o);
    }
    inst.push_back(std::move(ji));
  }
  j["instances"] = std::move(inst);
  return j.dump(2) + "\n";
}

std::string TransferJson(const TransferMatrix& m) {
  ordered_json j;
  j["format"] = "attrshield-transfer";
  j["version"] = kReportSchemaVersion;
  j["models"] = m.models;
  j["cells"] = m.cells;
  j["crafted"] = m.crafted;
  j["source_success_rate"] = m.source_success_rate;
  return j.dump(2) + "\n";
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void WriteCsv(const std::filesystem::path& path, const std::vector<InstanceRow>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.origin_id << ',' << r.label << ',' << (r.success ? 1 : 0) << ',' << r.word_diff << ','
       << r.m << ',' << FormatDouble(r.ptb_rate) << ',' << r.generations << ','
       << FormatDouble(r.ms) << '\n';
  }
  WriteText(path, os.str());
}

std::vector<InstanceRow> ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error(path.string() + ": missing instance csv header");
  }
  std::vector<InstanceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error(path.string() + ": expected 8 fields: " + line);
    InstanceRow r;
    r.origin_id = ParseInt<std::uint64_t>(f[0]);
    r.label = ParseInt<int>(f[1]);
    r.success = ParseInt<int>(f[2]) != 0;
    r.word_diff = ParseInt<int>(f[3]);
    r.m = ParseInt<std::size_t>(f[4]);
    r.ptb_rate = ParseDouble(f[5]);
    r.generations = ParseInt<int>(f[6]);
    r.ms = ParseDouble(f[7]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace attrshield::eval
