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

#include <benchmark/benchmark.h>

#include "attrshield/attack.h"
#include "attrshield/candidates.h"
#include "attrshield/planted.h"

using namespace attrshield;

namespace {

// Trained once and shared; the arch argument picks the surrogate.
const planted::PlantedBenchmark& Fixture(clf::Arch arch) {
  static const auto make = [](clf::Arch a) {
    clf::TrainConfig train;
    train.epochs = 50;
    return planted::MakePlantedBenchmark({}, train, a);
  };
  static const planted::PlantedBenchmark boe = make(clf::Arch::kBoe);
  static const planted::PlantedBenchmark cnn = make(clf::Arch::kCnn);
  return arch == clf::Arch::kBoe ? boe : cnn;
}

clf::Arch ArchArg(const benchmark::State& state) {
  return state.range(0) == 0 ? clf::Arch::kBoe : clf::Arch::kCnn;
}

}  // namespace

static void BM_Predict(benchmark::State& state) {
  const auto& b = Fixture(ArchArg(state));
  const auto& doc = b.split.test.front();
  for (auto _ : state) benchmark::DoNotOptimize(b.model->Predict(doc));
  state.SetLabel(clf::ArchName(ArchArg(state)));
}

static void BM_InputGradients(benchmark::State& state) {
  const auto& b = Fixture(ArchArg(state));
  const auto& doc = b.split.test.front();
  for (auto _ : state) benchmark::DoNotOptimize(b.model->InputGradients(doc, doc.label_id));
  state.SetLabel(clf::ArchName(ArchArg(state)));
}

static void BM_WordImportance(benchmark::State& state) {
  const auto& b = Fixture(clf::Arch::kBoe);
  const attack::Attacker attacker(*b.model, *b.table, &b.lm, {});
  const auto& doc = b.split.test.front();
  Rng rng = MakeRng(1, {1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(attack::WordImportance(doc, doc.label_id, attacker.context(), rng));
  }
}

static void BM_PerturbationSubroutine(benchmark::State& state) {
  const auto& b = Fixture(clf::Arch::kBoe);
  const attack::Attacker attacker(*b.model, *b.table, &b.lm, {});
  const auto& doc = b.split.test.front();
  const auto probs = attack::UniformSelection(doc);
  const int target = attack::ChooseTarget(*b.model, doc, doc.label_id);
  Rng rng = MakeRng(2, {2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(cand::PerturbationSubroutine(doc, target, probs, attacker.context(), rng));
  }
}

static void BM_Attack(benchmark::State& state) {
  const auto& b = Fixture(clf::Arch::kBoe);
  const auto strategy = static_cast<attack::Strategy>(state.range(0));
  const attack::Attacker attacker(*b.model, *b.table, &b.lm, {});
  std::size_t i = 0, successes = 0, runs = 0;
  for (auto _ : state) {
    const auto out = attacker.Run(b.split.test[i++ % b.split.test.size()], strategy);
    successes += out.success;
    ++runs;
  }
  state.counters["success_rate"] = runs ? static_cast<double>(successes) / runs : 0.0;
  state.SetLabel(attack::StrategyName(strategy));
}

BENCHMARK(BM_Predict)->Arg(0)->Arg(1);
BENCHMARK(BM_InputGradients)->Arg(0)->Arg(1);
BENCHMARK(BM_WordImportance);
BENCHMARK(BM_PerturbationSubroutine);
BENCHMARK(BM_Attack)
    ->Arg(static_cast<int>(attack::Strategy::kAdv4sg))
    ->Arg(static_cast<int>(attack::Strategy::kGeneticRandom))
    ->Arg(static_cast<int>(attack::Strategy::kGreedy))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
