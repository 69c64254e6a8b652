// Copyright 2026 The Preflab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "preflab/connectivity.h"
#include "preflab/distribution_design.h"
#include "preflab/experiments.h"
#include "preflab/representability.h"
#include "preflab/scorers.h"
#include "preflab/training.h"

namespace preflab {
namespace {

void BM_ComputeScoreTable(benchmark::State& state) {
  const GroundTruth gt = GenGroundTruth(16, 128, 32, 8, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeScoreTable(gt.model, gt.items));
  }
}
BENCHMARK(BM_ComputeScoreTable);

void BM_TrainBtEpoch(benchmark::State& state) {
  const GroundTruth gt = GenGroundTruth(16, 128, 32, 8, 0);
  const ConditionalPair pair =
      BtConsistentPair(gt.scores, UniformNegative(16, 16));
  const TripletDataset train = SampleTriplets(pair, state.range(0), 1);
  const TripletDataset val = SampleTriplets(pair, 256, 2);
  const ScoreModel init =
      InitModel(ScoreKind::kCosineMlp, ModelDims::CosineMlp(128, 32, 8), 3);
  TrainConfig config;
  config.epochs = 1;
  config.learning_rates = {1e-3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(TrainBt(init, &gt.items, train, val, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainBtEpoch)->Arg(1024)->Arg(8192);

void BM_TabularConnectivity(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Eigen::MatrixXd t = Eigen::MatrixXd::Ones(m, m);
  t.diagonal().setZero();
  t /= t.sum();
  const auto dist = TabularTripletDistribution::SingleContext(t);
  for (auto _ : state) {
    benchmark::DoNotOptimize(TabularConnectivity(dist));
  }
}
BENCHMARK(BM_TabularConnectivity)->Arg(16)->Arg(128);

void BM_VariationalConnectivityMlp(benchmark::State& state) {
  const GroundTruth gt = GenGroundTruth(16, 128, 32, 8, 0);
  const auto dist = ProductDistribution(
      BtConsistentPair(gt.scores, UniformNegative(16, 16)));
  HypothesisClass cls;
  cls.kind = ScoreKind::kCosineMlp;
  cls.dims = ModelDims::CosineMlp(128, 32, 8);
  cls.items = &gt.items;
  VariationalConfig config;
  config.restarts = 1;
  config.steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(VariationalConnectivity(
        dist, TestDistributionQ::Uniform(16, 16), cls, config));
  }
}
BENCHMARK(BM_VariationalConnectivityMlp)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace preflab

BENCHMARK_MAIN();
