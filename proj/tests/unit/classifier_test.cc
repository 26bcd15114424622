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

#include "attrshield/classifier.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "attrshield/rng.h"
#include "test_util.h"

namespace attrshield::clf {
namespace {

using ::attrshield::testing::Doc;
using ::attrshield::testing::MakeTable;
using ::attrshield::testing::TempDir;

std::shared_ptr<emb::EmbeddingTable> RandomTable(std::size_t words, std::size_t dim,
                                                 std::uint64_t seed) {
  auto t = std::make_shared<emb::EmbeddingTable>(dim);
  Rng rng = MakeRng(seed, {0});
  for (std::size_t i = 0; i < words; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = UniformUnit(rng) * 2 - 1;
    t->Add("w" + std::to_string(i), v);
  }
  return t;
}

std::unique_ptr<TextClassifier> RandomModel(Arch arch, std::shared_ptr<emb::EmbeddingTable> t,
                                            int classes, std::uint64_t seed) {
  std::vector<std::string> names;
  for (int c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
  auto m = MakeModel(arch, std::move(t), names, 5);
  Rng rng = MakeRng(seed, {1});
  m->Initialize(rng);
  // Larger biases than the default zero init exercise every term.
  for (double& p : m->parameters()) p += 0.1 * (UniformUnit(rng) - 0.5);
  return m;
}

}  // namespace

void PrintTo(Arch arch, std::ostream* os) { *os << ArchName(arch); }

namespace {

class GradientTest : public ::testing::TestWithParam<Arch> {};

// Central differences against the analytic input gradients, every entry.
TEST_P(GradientTest, InputGradientsMatchFiniteDifferences) {
  auto table = RandomTable(10, 4, 3);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto model = RandomModel(GetParam(), table, 3, seed);
    const auto doc = Doc("w1 w4 w2 w7 w1");
    EncodedDocument x = Encode(doc, *table);
    for (int label = 0; label < 3; ++label) {
      const auto g = model->InputGradientsEncoded(x, label);
      ASSERT_EQ(g.data.size(), x.data.size());
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double h = 1e-6, orig = x.data[i];
        x.data[i] = orig + h;
        const double up = model->PredictEncoded(x)[label];
        x.data[i] = orig - h;
        const double down = model->PredictEncoded(x)[label];
        x.data[i] = orig;
        EXPECT_NEAR(g.data[i], (up - down) / (2 * h), 1e-7) << "entry " << i;
      }
    }
  }
}

// Cross-entropy parameter gradients from Backward against finite differences.
TEST_P(GradientTest, ParameterGradientsMatchFiniteDifferences) {
  auto table = RandomTable(10, 3, 4);
  auto model = RandomModel(GetParam(), table, 2, 9);
  const EncodedDocument x = Encode(Doc("w0 w3 w5"), *table);
  const int y = 1;
  auto loss = [&] { return -std::log(model->PredictEncoded(x)[y]); };
  const auto p = model->PredictEncoded(x);
  std::vector<double> dlogits(p.probs);
  dlogits[y] -= 1.0;
  std::vector<double> grad(model->parameters().size(), 0.0);
  model->Backward(x, dlogits, grad, nullptr);
  auto params = model->parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double h = 1e-6, orig = params[i];
    params[i] = orig + h;
    const double up = loss();
    params[i] = orig - h;
    const double down = loss();
    params[i] = orig;
    EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-6) << "param " << i;
  }
}

TEST_P(GradientTest, ZeroOutputWeightsGiveUniformScoresAndZeroGradients) {
  auto table = RandomTable(6, 3, 5);
  auto model = RandomModel(GetParam(), table, 4, 1);
  std::fill(model->parameters().begin(), model->parameters().end(), 0.0);
  const auto doc = Doc("w0 w1 w2");
  const auto p = model->Predict(doc);
  for (int c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(p[c], 0.25);
  for (double g : model->InputGradients(doc, 2).data) EXPECT_EQ(g, 0.0);
}

TEST_P(GradientTest, ScoresFormADistribution) {
  auto table = RandomTable(8, 4, 6);
  auto model = RandomModel(GetParam(), table, 3, 2);
  for (const char* text : {"w0", "w1 w2", "w3 w4 w5 w6 w7", "unknown w1"}) {
    const auto p = model->Predict(Doc(text));
    double total = 0.0;
    for (double q : p.probs) {
      EXPECT_GE(q, 0.0);
      EXPECT_LE(q, 1.0);
      total += q;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST_P(GradientTest, CloneAndSaveLoadPreserveScores) {
  TempDir dir;
  auto table = RandomTable(8, 4, 7);
  auto model = RandomModel(GetParam(), table, 2, 3);
  SaveModel(*model, dir / "m.json");
  auto back = LoadModel(dir / "m.json", table);
  auto clone = model->Clone();
  const auto doc = Doc("w2 w5 w1");
  EXPECT_EQ(back->arch(), GetParam());
  EXPECT_EQ(back->class_names(), model->class_names());
  EXPECT_EQ(back->Predict(doc).probs, model->Predict(doc).probs);
  EXPECT_EQ(clone->Predict(doc).probs, model->Predict(doc).probs);
}

TEST_P(GradientTest, LoadRejectsDifferentEmbeddings) {
  TempDir dir;
  auto model = RandomModel(GetParam(), RandomTable(8, 4, 7), 2, 3);
  SaveModel(*model, dir / "m.json");
  EXPECT_THROW(LoadModel(dir / "m.json", RandomTable(9, 4, 7)), std::runtime_error);
}

INSTANTIATE_TEST_SUITE_P(Archs, GradientTest, ::testing::Values(Arch::kBoe, Arch::kCnn),
                         [](const auto& info) { return ArchName(info.param); });

TEST(BoeMlpModelTest, PermutationInvariant) {
  auto table = RandomTable(8, 4, 10);
  auto model = RandomModel(Arch::kBoe, table, 3, 4);
  const auto a = model->Predict(Doc("w1 w2 w3 w4"));
  const auto b = model->Predict(Doc("w4 w2 w1 w3"));
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
}

TEST(MarginTest, WorkedExamples) {
  EXPECT_NEAR(Margin(PredictionScores{{0.7, 0.3}}, 0), 0.4, 1e-12);
  EXPECT_NEAR(Margin(PredictionScores{{0.7, 0.3}}, 1), -0.4, 1e-12);
  EXPECT_EQ(Margin(PredictionScores{{0.5, 0.5}}, 1), 0.0);
  EXPECT_EQ(PredictionScores({{0.5, 0.5}}).Argmax(), 0);
}

TEST(MarginTest, NegativeExactlyWhenMisclassified) {
  Rng rng = MakeRng(1, {2});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(4);
    for (double& q : p) q = UniformUnit(rng);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& q : p) q /= s;
    const PredictionScores scores{p};
    const int y = static_cast<int>(UniformIndex(rng, 4));
    EXPECT_EQ(Margin(scores, y) < 0, scores.Argmax() != y);
  }
}

TEST(EncodeTest, EmptyDocumentThrows) {
  auto table = RandomTable(2, 2, 1);
  EXPECT_THROW(Encode(corpus::TokenizedDocument({}, 0, 0), *table), std::invalid_argument);
}

TEST(ArchTest, NamesRoundTrip) {
  EXPECT_EQ(ParseArch(ArchName(Arch::kCnn)), Arch::kCnn);
  EXPECT_EQ(ParseArch("boe"), Arch::kBoe);
  EXPECT_THROW(ParseArch("rnn"), std::invalid_argument);
}

// "queso" marks the south class; the other words are shared filler.
corpus::DatasetSplit QuesoSplit() {
  corpus::DatasetSplit split;
  const char* filler[] = {"the", "dip", "was", "good", "today"};
  Rng rng = MakeRng(2, {3});
  for (int i = 0; i < 80; ++i) {
    const int label = i % 2;
    std::vector<std::string> toks;
    for (int k = 0; k < 4; ++k) toks.push_back(filler[UniformIndex(rng, 5)]);
    if (label == 1) toks.insert(toks.begin() + UniformIndex(rng, 5), "queso");
    auto& dest = i < 64 ? split.train : split.test;
    dest.emplace_back(toks, label, static_cast<std::uint64_t>(i));
  }
  return split;
}

std::shared_ptr<emb::EmbeddingTable> QuesoTable() {
  return MakeTable({{"the", {0.1, 0.0, 0.2}},
                    {"dip", {0.0, 0.3, 0.1}},
                    {"was", {0.2, 0.1, 0.0}},
                    {"good", {0.1, 0.2, 0.3}},
                    {"today", {0.3, 0.0, 0.1}},
                    {"queso", {1.0, -1.0, 0.8}}});
}

TEST(TrainTest, LearnsKeyword) {
  auto model = MakeModel(Arch::kBoe, QuesoTable(), {"north", "south"});
  TrainConfig cfg;
  cfg.epochs = 60;
  const auto report = Train(*model, QuesoSplit(), cfg);
  EXPECT_EQ(report.final_test_accuracy(), 1.0);
  EXPECT_GT(model->Confidence(Doc("they use the white queso dip"), 1), 0.9);
}

TEST(TrainTest, DeterministicForSeed) {
  TrainConfig cfg;
  cfg.epochs = 5;
  auto a = MakeModel(Arch::kCnn, QuesoTable(), {"north", "south"});
  auto b = MakeModel(Arch::kCnn, QuesoTable(), {"north", "south"});
  Train(*a, QuesoSplit(), cfg);
  Train(*b, QuesoSplit(), cfg);
  EXPECT_TRUE(std::equal(a->parameters().begin(), a->parameters().end(),
                         b->parameters().begin(), b->parameters().end()));
}

TEST(TrainTest, TargetAccuracyStopsEarly) {
  auto model = MakeModel(Arch::kBoe, QuesoTable(), {"north", "south"});
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.target_accuracy = 0.9;
  const auto report = Train(*model, QuesoSplit(), cfg);
  EXPECT_LT(report.epochs.size(), 200u);
  EXPECT_GE(report.final_test_accuracy(), 0.9);
}

TEST(TrainTest, SingleClassThrows) {
  auto split = QuesoSplit();
  for (auto& d : split.train) d.label_id = 0;
  auto model = MakeModel(Arch::kBoe, QuesoTable(), {"north", "south"});
  EXPECT_THROW(Train(*model, split, TrainConfig{}), std::invalid_argument);
}

TEST(AdversarialRetrainTest, Bookkeeping) {
  auto model = MakeModel(Arch::kBoe, QuesoTable(), {"north", "south"});
  TrainConfig cfg;
  cfg.epochs = 40;
  const auto split = QuesoSplit();
  Train(*model, split, cfg);
  std::size_t calls = 0;
  const AttackFn attack = [&](const TextClassifier&, const corpus::TokenizedDocument& d)
      -> std::optional<corpus::TokenizedDocument> {
    ++calls;
    auto copy = d;
    copy.tokens.push_back("today");
    copy.perturbed_mask.push_back(false);
    return copy;
  };

  auto none = AdversarialRetrain(*model, split, attack, 0.0, cfg);
  EXPECT_EQ(none.sampled, 0u);
  EXPECT_EQ(none.generated, 0u);
  EXPECT_EQ(none.augmented_size, split.train.size());
  EXPECT_EQ(calls, 0u);

  auto half = AdversarialRetrain(*model, split, attack, 0.5, cfg);
  EXPECT_EQ(half.sampled, calls);
  EXPECT_EQ(half.generated, half.sampled);
  EXPECT_EQ(half.augmented_size, split.train.size() + half.generated);
  EXPECT_NEAR(static_cast<double>(half.sampled), 0.5 * split.train.size(), 1.0);
  EXPECT_EQ(half.model->arch(), Arch::kBoe);
}

}  // namespace
}  // namespace attrshield::clf
