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

// attrshield: train surrogate classifiers and craft attribute-obfuscating
// adversarial texts from the command line.
//
// Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attrshield/attack.h"
#include "attrshield/candidates.h"
#include "attrshield/classifier.h"
#include "attrshield/corpus.h"
#include "attrshield/embeddings.h"
#include "attrshield/eval.h"
#include "attrshield/ngram_lm.h"
#include "attrshield/planted.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace attrshield::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Paths a checkpoint was trained with, stored next to it so later commands
// need only --model.
struct ModelMeta {
  std::string embeddings;
  std::string lm;
  std::size_t max_len = corpus::kDefaultMaxLen;
};

fs::path MetaPath(const fs::path& model) { return fs::path(model.string() + ".meta.json"); }
fs::path LmPath(const fs::path& model) { return fs::path(model.string() + ".lm.json"); }

void WriteMeta(const fs::path& model, const ModelMeta& meta) {
  ordered_json j{{"embeddings", meta.embeddings}, {"lm", meta.lm}, {"max_len", meta.max_len}};
  eval::WriteText(MetaPath(model), j.dump(2) + "\n");
}

ModelMeta ReadMeta(const fs::path& model) {
  ModelMeta meta;
  if (!fs::exists(MetaPath(model))) return meta;
  const auto j = ordered_json::parse(ReadFile(MetaPath(model)));
  meta.embeddings = j.value("embeddings", "");
  meta.lm = j.value("lm", "");
  meta.max_len = j.value("max_len", corpus::kDefaultMaxLen);
  return meta;
}

// Options shared by every command that attacks.
struct AttackFlags {
  std::string strategy;
  int population = 0;
  int iterations = 0;
  double epsilon_rate = 0.0;
  double eta = 0.0;
  std::size_t pool_size = 0;
  int max_perturbations = -1;
  bool all = false;
  double sample_fraction = 0.5;
  std::size_t workers = 1;
  bool no_timing = false;
  std::string cand_embeddings;
  std::string leet_map;
  std::string lm;
  std::string out;
  std::string csv;

  std::vector<CLI::Option*> opts;
};

void AddAttackFlags(CLI::App* cmd, AttackFlags& f) {
  f.opts.push_back(cmd->add_option("--strategy", f.strategy, "adv4sg, genetic_random or greedy"));
  f.opts.push_back(cmd->add_option("--population", f.population, "Population size N"));
  f.opts.push_back(cmd->add_option("--iterations", f.iterations, "Maximum generations I"));
  f.opts.push_back(cmd->add_option("--epsilon-rate", f.epsilon_rate, "Word budget as a share of length"));
  f.opts.push_back(cmd->add_option("--eta", f.eta, "Semantic neighbor distance threshold"));
  f.opts.push_back(cmd->add_option("--pool-size", f.pool_size, "Candidate pool size n"));
  f.opts.push_back(cmd->add_option("--max-perturbations", f.max_perturbations,
                                   "Absolute word budget (overrides --epsilon-rate)"));
  cmd->add_flag("--all", f.all, "Attack every correctly classified document");
  cmd->add_option("--sample-fraction", f.sample_fraction, "Share of correct documents to attack")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--workers", f.workers, "Concurrent attacks")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-timing", f.no_timing, "Report wall times as 0 for reproducible output");
  cmd->add_option("--cand-embeddings", f.cand_embeddings, "Embedding file for semantic candidates");
  cmd->add_option("--leet-map", f.leet_map, "JSON object of leet substitutions");
  cmd->add_option("--lm", f.lm, "Bigram sidecar (defaults to the one saved with the model)");
}

attack::AttackConfig ResolveConfig(const std::string& global_config, std::optional<std::uint64_t> seed,
                                   const AttackFlags& f) {
  attack::AttackConfig cfg;
  auto given = [&](std::size_t i) { return f.opts[i]->count() > 0; };
  try {
    if (!global_config.empty()) cfg = eval::ConfigFromJson(ReadFile(global_config), cfg);
    if (seed) cfg.seed = *seed;
    if (given(0)) cfg.strategy = attack::ParseStrategy(f.strategy);
    if (given(1)) cfg.population_size = f.population;
    if (given(2)) cfg.max_iterations = f.iterations;
    if (given(3)) cfg.epsilon_rate = f.epsilon_rate;
    if (given(4)) cfg.eta = f.eta;
    if (given(5)) cfg.pool_size = f.pool_size;
    if (given(6)) cfg.max_perturbations = f.max_perturbations;
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

eval::BatchOptions BatchFrom(const AttackFlags& f) {
  eval::BatchOptions b;
  b.attack_all = f.all;
  b.sample_fraction = f.sample_fraction;
  b.workers = f.workers;
  b.record_timing = !f.no_timing;
  return b;
}

struct LoadedModel {
  std::shared_ptr<const emb::EmbeddingTable> table;
  std::unique_ptr<clf::TextClassifier> model;
  ModelMeta meta;
};

LoadedModel LoadModelWithTable(const fs::path& model_path, const std::string& clf_embeddings) {
  LoadedModel lm;
  lm.meta = ReadMeta(model_path);
  const std::string emb_path = clf_embeddings.empty() ? lm.meta.embeddings : clf_embeddings;
  if (emb_path.empty()) {
    throw UsageError("no embedding file recorded for " + model_path.string() +
                     "; pass --clf-embeddings");
  }
  lm.table = std::make_shared<const emb::EmbeddingTable>(emb::LoadEmbeddings(emb_path));
  lm.model = clf::LoadModel(model_path, lm.table);
  return lm;
}

std::vector<corpus::TokenizedDocument> LoadDocs(const fs::path& path, const corpus::LabelSet& labels,
                                                std::size_t max_len) {
  const auto raw = corpus::LoadCorpus(path, corpus::FormatFromPath(path));
  auto batch = corpus::MakeDocuments(raw.records, labels, max_len);
  if (raw.skipped + batch.skipped > 0) {
    std::cerr << "note: skipped " << raw.skipped + batch.skipped << " row(s) of " << path.string()
              << "\n";
  }
  return std::move(batch.docs);
}

std::optional<lm::NgramModel> LoadLm(const std::string& flag, const fs::path& model_path,
                                     const ModelMeta& meta) {
  std::string path = flag;
  if (path.empty()) path = meta.lm;
  if (path.empty() && fs::exists(LmPath(model_path))) path = LmPath(model_path).string();
  if (path.empty()) return std::nullopt;
  return lm::NgramModel::Load(path);
}

fs::path CsvPathFor(const std::string& out, const std::string& csv) {
  if (!csv.empty()) return csv;
  fs::path p(out);
  p.replace_extension(".csv");
  return p;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ordered_json SummaryJson(const eval::MetricsReport& r) {
  return {{"attacked", r.attacked},
          {"successes", r.successes},
          {"clean_accuracy", r.clean_accuracy},
          {"post_attack_accuracy", r.post_attack_accuracy},
          {"success_rate", r.success_rate},
          {"mean_ptb_rate", r.mean_ptb_rate},
          {"mean_generations", r.mean_generations}};
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"Attribute-obfuscating adversarial texts for short social-media posts"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::string config_path;
  app.add_option("--seed", seed, "Seed for splits, initialization and attacks");
  app.add_option("--config", config_path, "Attack configuration JSON")->check(CLI::ExistingFile);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a planted-keyword corpus and embedding table");
  std::string synth_dir;
  std::size_t synth_docs = 500;
  bool synth_long = false;
  synth->add_option("--out-dir", synth_dir, "Output directory")->required();
  synth->add_option("--docs", synth_docs, "Number of documents")->check(CLI::PositiveNumber);
  synth->add_flag("--long", synth_long, "Long documents with a narrow class gap");

  // train
  auto* train = app.add_subcommand("train", "Train a surrogate classifier");
  std::string train_data, train_emb, train_out, train_arch = "boe", test_out, train_out_tsv;
  clf::TrainConfig tcfg;
  std::size_t width = 0, min_count = 1, max_len = corpus::kDefaultMaxLen;
  double train_ratio = 0.8;
  std::optional<double> target_acc;
  train->add_option("--data", train_data, "Labeled corpus (.tsv or .csv)")->required();
  train->add_option("--clf-embeddings,--embeddings", train_emb, "Classifier embedding file")->required();
  train->add_option("--arch", train_arch, "boe or cnn");
  train->add_option("--width", width, "Hidden units (boe) or filters (cnn)");
  train->add_option("--epochs", tcfg.epochs)->check(CLI::PositiveNumber);
  train->add_option("--lr", tcfg.learning_rate)->check(CLI::PositiveNumber);
  train->add_option("--batch-size", tcfg.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--l2", tcfg.l2)->check(CLI::NonNegativeNumber);
  train->add_option("--target-accuracy", target_acc, "Stop once held-out accuracy reaches this");
  train->add_option("--train-ratio", train_ratio)->check(CLI::Range(0.0, 1.0));
  train->add_option("--min-count", min_count, "Vocabulary frequency cutoff for the summary")
      ->check(CLI::PositiveNumber);
  train->add_option("--max-len", max_len, "Tokens kept per document")->check(CLI::PositiveNumber);
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--test-out", test_out, "Write the held-out split here");
  train->add_option("--train-out", train_out_tsv, "Write the training split here");

  // attack
  auto* atk = app.add_subcommand("attack", "Craft adversarial texts against a model");
  std::string atk_model, atk_data, atk_clf_emb;
  AttackFlags af;
  atk->add_option("--model", atk_model, "Checkpoint")->required();
  atk->add_option("--data", atk_data, "Documents to attack")->required();
  atk->add_option("--clf-embeddings,--embeddings", atk_clf_emb, "Classifier embedding file");
  AddAttackFlags(atk, af);
  atk->add_option("--out", af.out, "Report JSON path")->required();
  atk->add_option("--csv", af.csv, "Per-instance CSV path (defaults next to --out)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a model, or re-check a report against its CSV");
  std::string ev_model, ev_data, ev_emb, ev_csv, ev_report;
  ev->add_option("--model", ev_model, "Checkpoint");
  ev->add_option("--data", ev_data, "Labeled documents");
  ev->add_option("--clf-embeddings,--embeddings", ev_emb, "Classifier embedding file");
  ev->add_option("--csv", ev_csv, "Per-instance CSV to recompute metrics from");
  ev->add_option("--report", ev_report, "Report JSON to compare against");

  // transfer
  auto* tr = app.add_subcommand("transfer", "Cross-model transferability matrix");
  std::string tr_models, tr_data, tr_emb;
  AttackFlags tf;
  tr->add_option("--models", tr_models, "Comma-separated checkpoints")->required();
  tr->add_option("--data", tr_data, "Documents to attack")->required();
  tr->add_option("--clf-embeddings,--embeddings", tr_emb, "Classifier embedding file");
  AddAttackFlags(tr, tf);
  tr->add_option("--out", tf.out, "Matrix JSON path")->required();

  // advtrain
  auto* adv = app.add_subcommand("advtrain", "Retrain with adversarial examples and re-attack");
  std::string adv_model, adv_data, adv_emb, adv_out;
  double adv_fraction = 0.5, adv_ratio = 0.8;
  AttackFlags avf;
  clf::TrainConfig acfg;
  adv->add_option("--model", adv_model, "Checkpoint to harden")->required();
  adv->add_option("--data", adv_data, "Corpus the model was trained on")->required();
  adv->add_option("--clf-embeddings,--embeddings", adv_emb, "Classifier embedding file");
  adv->add_option("--fraction", adv_fraction, "Share of correct training docs to attack")
      ->check(CLI::Range(0.0, 1.0));
  adv->add_option("--train-ratio", adv_ratio)->check(CLI::Range(0.0, 1.0));
  adv->add_option("--epochs", acfg.epochs)->check(CLI::PositiveNumber);
  adv->add_option("--lr", acfg.learning_rate)->check(CLI::PositiveNumber);
  AddAttackFlags(adv, avf);
  adv->add_option("--out", adv_out, "Retrained checkpoint path")->required();
  adv->add_option("--report", avf.out, "Summary JSON path");

  // bench
  auto* bench = app.add_subcommand("bench", "Paired strategy comparison");
  std::string bn_model, bn_data, bn_emb, bn_strategies = "adv4sg,genetic_random";
  int bn_seeds = 5;
  std::size_t bn_limit = 100;
  AttackFlags bf;
  bench->add_option("--model", bn_model, "Checkpoint (omit for the built-in planted benchmark)");
  bench->add_option("--data", bn_data, "Documents to attack (with --model)");
  bench->add_option("--clf-embeddings,--embeddings", bn_emb, "Classifier embedding file");
  bench->add_option("--strategies", bn_strategies, "Comma-separated strategies");
  bench->add_option("--seeds", bn_seeds, "Attack seeds per instance")->check(CLI::PositiveNumber);
  bench->add_option("--limit", bn_limit, "Instances per seed")->check(CLI::PositiveNumber);
  AddAttackFlags(bench, bf);
  bench->add_option("--out", bf.out, "Bench JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      planted::PlantedOptions o = synth_long ? planted::LongDocumentOptions() : planted::PlantedOptions{};
      o.num_docs = synth_docs;
      if (seed) o.seed = *seed;
      const auto pc = planted::MakePlantedCorpus(o);
      fs::create_directories(synth_dir);
      std::ostringstream tsv;
      for (const auto& r : pc.records) tsv << r.label << '\t' << r.text << '\n';
      eval::WriteText(fs::path(synth_dir) / "corpus.tsv", tsv.str());
      emb::SaveEmbeddings(fs::path(synth_dir) / "embeddings.txt", pc.table);
      std::cout << ordered_json{{"docs", pc.records.size()}, {"vocab", pc.table.size()}}.dump() << "\n";
      return kExitOk;
    }

    if (train->parsed()) {
      const auto table = std::make_shared<const emb::EmbeddingTable>(emb::LoadEmbeddings(train_emb));
      const auto raw = corpus::LoadCorpus(train_data, corpus::FormatFromPath(train_data));
      const auto labels = corpus::LabelSet::FromRecords(raw.records);
      const auto batch = corpus::MakeDocuments(raw.records, labels, max_len);
      if (seed) tcfg.seed = *seed;
      tcfg.target_accuracy = target_acc;
      const auto split = corpus::Split(batch.docs, train_ratio, tcfg.seed);
      const auto vocab = corpus::BuildVocab(split.train, min_count, labels);
      auto model = clf::MakeModel(clf::ParseArch(train_arch), table, labels.names(), width);
      const auto report = clf::Train(*model, split, tcfg);
      clf::SaveModel(*model, train_out);
      const auto lm = lm::NgramModel::Fit(split.train);
      lm.Save(LmPath(train_out));
      WriteMeta(train_out, {fs::absolute(train_emb).string(), fs::absolute(LmPath(train_out)).string(), max_len});
      if (!test_out.empty()) corpus::WriteTsv(test_out, split.test, labels);
      if (!train_out_tsv.empty()) corpus::WriteTsv(train_out_tsv, split.train, labels);
      std::cout << ordered_json{{"arch", train_arch},
                                {"train_docs", split.train.size()},
                                {"test_docs", split.test.size()},
                                {"vocabulary", vocab.size()},
                                {"epochs", report.epochs.size()},
                                {"train_accuracy", report.epochs.back().train_accuracy},
                                {"test_accuracy", report.final_test_accuracy()}}
                       .dump()
                << "\n";
      return kExitOk;
    }

    if (atk->parsed()) {
      const auto cfg = ResolveConfig(config_path, seed, af);
      auto loaded = LoadModelWithTable(atk_model, atk_clf_emb);
      const corpus::LabelSet labels(loaded.model->class_names());
      const auto docs = LoadDocs(atk_data, labels, loaded.meta.max_len);
      const auto cand_table = af.cand_embeddings.empty()
                                  ? loaded.table
                                  : std::make_shared<const emb::EmbeddingTable>(
                                        emb::LoadEmbeddings(af.cand_embeddings));
      const auto lm = LoadLm(af.lm, atk_model, loaded.meta);
      const auto leet = af.leet_map.empty() ? cand::LeetMap::Default() : cand::LeetMap::Load(af.leet_map);
      attack::Attacker attacker(*loaded.model, *cand_table, lm ? &*lm : nullptr, cfg, leet);
      const auto report = eval::RunAttackBatch(attacker, docs, BatchFrom(af));
      ordered_json meta{{"model", atk_model}, {"data", atk_data}, {"arch", clf::ArchName(loaded.model->arch())}};
      eval::WriteText(af.out, eval::ReportJson(report, cfg, labels, meta.dump()));
      eval::WriteCsv(CsvPathFor(af.out, af.csv), report.rows);
      std::cout << SummaryJson(report).dump() << "\n";
      return kExitOk;
    }

    if (ev->parsed()) {
      if (!ev_csv.empty()) {
        auto rows = eval::ReadCsv(ev_csv);
        std::size_t test_size = 0, correct = 0;
        ordered_json rep;
        if (!ev_report.empty()) {
          rep = ordered_json::parse(ReadFile(ev_report));
          test_size = rep.at("summary").at("test_size").get<std::size_t>();
          correct = rep.at("summary").at("correct").get<std::size_t>();
        }
        const auto m = eval::Summarize(std::move(rows), test_size, correct);
        ordered_json out{{"attacked", m.attacked},
                         {"successes", m.successes},
                         {"success_rate", m.success_rate},
                         {"median_ptb_rate", m.median_ptb_rate},
                         {"mean_ptb_rate", m.mean_ptb_rate},
                         {"mean_generations", m.mean_generations}};
        bool consistent = true;
        if (!ev_report.empty()) {
          for (const auto& key : {"success_rate", "median_ptb_rate", "mean_ptb_rate", "mean_generations"}) {
            if (rep["summary"][key].get<double>() != out[key].get<double>()) consistent = false;
          }
          const auto cdf = eval::SuccessCdf(m, {1, 2, 3, 4, 5, 10});
          for (std::size_t i = 0; i < cdf.size(); ++i) {
            if (rep["success_cdf"][i]["fraction"].get<double>() != cdf[i].second) consistent = false;
          }
          out["consistent"] = consistent;
        }
        std::cout << out.dump() << "\n";
        return consistent ? kExitOk : kExitRuntime;
      }
      if (ev_model.empty() || ev_data.empty()) {
        throw UsageError("evaluate needs --model and --data, or --csv");
      }
      auto loaded = LoadModelWithTable(ev_model, ev_emb);
      const corpus::LabelSet labels(loaded.model->class_names());
      const auto docs = LoadDocs(ev_data, labels, loaded.meta.max_len);
      std::cout << ordered_json{{"docs", docs.size()}, {"accuracy", clf::Accuracy(*loaded.model, docs)}}.dump()
                << "\n";
      return kExitOk;
    }

    if (tr->parsed()) {
      const auto cfg = ResolveConfig(config_path, seed, tf);
      const auto paths = SplitList(tr_models);
      if (paths.size() < 2) throw UsageError("--models needs at least two checkpoints");
      std::vector<LoadedModel> loaded;
      for (const auto& p : paths) loaded.push_back(LoadModelWithTable(p, tr_emb));
      for (const auto& l : loaded) {
        if (l.table->Fingerprint() != loaded.front().table->Fingerprint()) {
          throw std::runtime_error("transfer models must share one embedding table");
        }
      }
      const corpus::LabelSet labels(loaded.front().model->class_names());
      const auto docs = LoadDocs(tr_data, labels, loaded.front().meta.max_len);
      const auto cand_table = tf.cand_embeddings.empty()
                                  ? loaded.front().table
                                  : std::make_shared<const emb::EmbeddingTable>(
                                        emb::LoadEmbeddings(tf.cand_embeddings));
      const auto lm = LoadLm(tf.lm, paths.front(), loaded.front().meta);
      std::vector<const clf::TextClassifier*> models;
      for (const auto& l : loaded) models.push_back(l.model.get());
      const auto matrix = eval::ComputeTransferMatrix(models, paths, docs, *cand_table,
                                                      lm ? &*lm : nullptr, cfg, BatchFrom(tf));
      eval::WriteText(tf.out, eval::TransferJson(matrix));
      std::cout << ordered_json{{"models", matrix.models}, {"cells", matrix.cells}}.dump() << "\n";
      return kExitOk;
    }

    if (adv->parsed()) {
      const auto cfg = ResolveConfig(config_path, seed, avf);
      auto loaded = LoadModelWithTable(adv_model, adv_emb);
      const corpus::LabelSet labels(loaded.model->class_names());
      const auto docs = LoadDocs(adv_data, labels, loaded.meta.max_len);
      if (seed) acfg.seed = *seed;
      const auto split = corpus::Split(docs, adv_ratio, acfg.seed);
      const auto lm = LoadLm(avf.lm, adv_model, loaded.meta);
      const auto* lm_ptr = lm ? &*lm : nullptr;
      const auto& table = *loaded.table;
      clf::AttackFn fn = [&](const clf::TextClassifier& m, const corpus::TokenizedDocument& d)
          -> std::optional<corpus::TokenizedDocument> {
        attack::Attacker a(m, table, lm_ptr, cfg);
        auto o = a.Run(d);
        if (o.success && o.adversarial) return *o.adversarial;
        return std::nullopt;
      };
      auto result = clf::AdversarialRetrain(*loaded.model, split, fn, adv_fraction, acfg);
      clf::SaveModel(*result.model, adv_out);
      lm::NgramModel::Fit(split.train).Save(LmPath(adv_out));
      WriteMeta(adv_out, {loaded.meta.embeddings.empty() ? fs::absolute(adv_emb).string() : loaded.meta.embeddings,
                          fs::absolute(LmPath(adv_out)).string(), loaded.meta.max_len});

      attack::Attacker before(*loaded.model, table, lm_ptr, cfg);
      attack::Attacker after(*result.model, table, lm_ptr, cfg);
      const auto rb = eval::RunAttackBatch(before, split.test, BatchFrom(avf));
      const auto ra = eval::RunAttackBatch(after, split.test, BatchFrom(avf));
      ordered_json out{{"sampled", result.sampled},
                       {"generated", result.generated},
                       {"augmented_size", result.augmented_size},
                       {"before", SummaryJson(rb)},
                       {"after", SummaryJson(ra)},
                       {"success_rate_drop", rb.success_rate - ra.success_rate}};
      if (!avf.out.empty()) eval::WriteText(avf.out, out.dump(2) + "\n");
      std::cout << out.dump() << "\n";
      return kExitOk;
    }

    if (bench->parsed()) {
      auto cfg = ResolveConfig(config_path, seed, bf);
      std::vector<attack::Strategy> strategies;
      for (const auto& s : SplitList(bn_strategies)) strategies.push_back(attack::ParseStrategy(s));
      if (strategies.empty()) throw UsageError("--strategies is empty");

      std::optional<planted::PlantedBenchmark> planted_bench;
      std::optional<LoadedModel> loaded;
      const clf::TextClassifier* model = nullptr;
      const emb::EmbeddingTable* table = nullptr;
      std::optional<lm::NgramModel> lm;
      std::vector<corpus::TokenizedDocument> docs;
      if (bn_model.empty()) {
        clf::TrainConfig bt;
        bt.epochs = 3000;
        bt.learning_rate = 1.0;
        bt.l2 = 0.0;
        bt.target_accuracy = 0.95;
        auto opts = planted::LongDocumentOptions();
        opts.num_docs = 1000;
        planted_bench = planted::MakePlantedBenchmark(opts, bt);
        model = planted_bench->model.get();
        table = planted_bench->table.get();
        lm = planted_bench->lm;
        docs = planted_bench->split.test;
      } else {
        if (bn_data.empty()) throw UsageError("bench --model needs --data");
        loaded = LoadModelWithTable(bn_model, bn_emb);
        model = loaded->model.get();
        table = loaded->table.get();
        lm = LoadLm(bf.lm, bn_model, loaded->meta);
        docs = LoadDocs(bn_data, corpus::LabelSet(model->class_names()), loaded->meta.max_len);
      }

      std::vector<std::size_t> correct;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (model->Predict(docs[i]).Argmax() == docs[i].label_id) correct.push_back(i);
      }
      if (correct.size() > bn_limit) correct.resize(bn_limit);

      struct Tally {
        std::size_t runs = 0, successes = 0;
        double gens = 0.0, paired_gens = 0.0;
      };
      std::vector<Tally> tally(strategies.size());
      std::size_t paired = 0;
      const std::uint64_t base_seed = cfg.seed;
      for (int s = 0; s < bn_seeds; ++s) {
        cfg.seed = base_seed + static_cast<std::uint64_t>(s);
        attack::Attacker attacker(*model, *table, lm ? &*lm : nullptr, cfg);
        for (std::size_t i : correct) {
          std::vector<attack::AttackOutcome> outs;
          for (auto st : strategies) outs.push_back(attacker.Run(docs[i], st));
          bool all_ok = true;
          for (std::size_t k = 0; k < outs.size(); ++k) {
            ++tally[k].runs;
            if (outs[k].success) {
              ++tally[k].successes;
              tally[k].gens += outs[k].generations;
            } else {
              all_ok = false;
            }
          }
          if (all_ok) {
            ++paired;
            for (std::size_t k = 0; k < outs.size(); ++k) tally[k].paired_gens += outs[k].generations;
          }
        }
      }
      cfg.seed = base_seed;
      ordered_json per = ordered_json::array();
      for (std::size_t k = 0; k < strategies.size(); ++k) {
        const auto& t = tally[k];
        per.push_back({{"strategy", attack::StrategyName(strategies[k])},
                       {"runs", t.runs},
                       {"success_rate", t.runs ? static_cast<double>(t.successes) / t.runs : 0.0},
                       {"mean_generations", t.successes ? t.gens / t.successes : 0.0},
                       {"paired_mean_generations", paired ? t.paired_gens / paired : 0.0}});
      }
      ordered_json out{{"instances", correct.size()}, {"seeds", bn_seeds}, {"paired", paired},
                       {"config", ordered_json::parse(eval::ConfigJson(cfg))}, {"strategies", per}};
      if (!bf.out.empty()) eval::WriteText(bf.out, out.dump(2) + "\n");
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace attrshield::cli

int main(int argc, char** argv) { return attrshield::cli::Main(argc, argv); }
