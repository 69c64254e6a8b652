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

#include "preflab/experiments.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "preflab/distribution_design.h"
#include "preflab/errors.h"
#include "preflab/evaluation.h"
#include "preflab/representability.h"
#include "preflab/rng.h"
#include "preflab/triplets.h"

namespace preflab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(0..count-1) on up to WorkerCount() threads. The first exception
// thrown by any task is rethrown after all workers finish.
void ParallelFor(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(WorkerCount(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string FormatReal(double value) { return fmt::format("{:.17g}", value); }

HypothesisClass ConnClass(const ExperimentConfig& config,
                          const GroundTruth& gt) {
  HypothesisClass cls;
  cls.kind = config.conn_class;
  cls.items = &gt.items;
  switch (config.conn_class) {
    case ScoreKind::kTabular:
      cls.dims = ModelDims::Tabular(config.m, config.m);
      break;
    case ScoreKind::kLinear: {
      auto features = std::make_shared<FeatureTable>(
          CenterFeatures(ConcatFeatures(gt.items),
                         UniformNegative(config.m, config.m)));
      cls.dims = ModelDims::Linear(features->dim());
      cls.features = std::move(features);
      break;
    }
    case ScoreKind::kCosineMlp:
      cls.dims = ModelDims::CosineMlp(config.d, config.hidden, config.embed);
      break;
  }
  return cls;
}

ComparisonDistribution ComparisonFor(const ScoreTable& target,
                                     const ScoreTable& p_minus) {
  return MakeComparisonDistribution(
      ProductDistribution(BtConsistentPair(target, p_minus)));
}

double LambdaConn(const ExperimentConfig& config, const GroundTruth& gt,
                  const ScoreTable& target, const ScoreTable& p_minus,
                  std::uint64_t seed) {
  VariationalConfig vc = config.connectivity;
  vc.seed = seed;
  return VariationalConnectivity(ComparisonFor(target, p_minus),
                                 TestDistributionQ::Uniform(config.m, config.m),
                                 ConnClass(config, gt), vc)
      .value;
}

// Samples training and validation triplets from the BT-consistent pair for
// `train_target`, trains a fresh cosine-MLP and evaluates it against the
// ground truth. Streams depend only on `cell_seed`, so variants sharing a
// cell seed see the same initialization and sampling randomness.
RunRecord TrainCell(const ExperimentConfig& config, const GroundTruth& gt,
                    const ScoreTable& train_target, const ScoreTable& p_minus,
                    int n, std::uint64_t cell_seed) {
  RunRecord record;
  record.n = n;
  const ConditionalPair pair = BtConsistentPair(train_target, p_minus);
  const TripletDataset train =
      SampleTriplets(pair, n, DeriveSeed(cell_seed, {StreamLabel("train")}));
  const TripletDataset validation =
      SampleTriplets(pair, config.train.validation_size,
                     DeriveSeed(cell_seed, {StreamLabel("validation")}));
  TrainConfig train_config = config.train;
  train_config.seed = DeriveSeed(cell_seed, {StreamLabel("optimizer")});
  const ScoreModel initial =
      InitModel(ScoreKind::kCosineMlp,
                ModelDims::CosineMlp(config.d, config.hidden, config.embed),
                DeriveSeed(cell_seed, {StreamLabel("init")}));
  try {
    const TrainResult result =
        TrainBt(initial, &gt.items, train, validation, train_config);
    const ScoreTable fitted = ComputeScoreTable(result.model, &gt.items);
    const TestDistributionQ q = TestDistributionQ::Uniform(config.m, config.m);
    record.accuracy = Accuracy(fitted, gt.scores, q);
    record.acc_bottom10 = BottomFractionAccuracy(fitted, gt.scores, q, 0.1);
    record.acc_bottom30 = BottomFractionAccuracy(fitted, gt.scores, q, 0.3);
    record.estimation_error = EstimationError(fitted, train_target, q);
    record.final_val_loss = result.final_validation_loss;
  } catch (const PreflabError& e) {
    if (e.code() != ErrorCode::kTrainingDiverged) throw;
    record.accuracy = record.acc_bottom10 = record.acc_bottom30 = kNaN;
    record.estimation_error = record.final_val_loss = kNaN;
    record.status = "diverged";
  }
  return record;
}

std::vector<GroundTruth> GroundTruths(const ExperimentConfig& config) {
  std::vector<GroundTruth> out;
  out.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) {
    out.push_back(GenGroundTruth(config.m, config.d, config.hidden,
                                 config.embed, seed));
  }
  return out;
}

}  // namespace

std::string_view ExperimentKindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kMargin: return "margin";
    case ExperimentKind::kAlphaSweep: return "alpha_sweep";
    case ExperimentKind::kConnOptimize: return "conn_optimize";
  }
  return "unknown";
}

ExperimentKind ParseExperimentKind(std::string_view name) {
  if (name == "margin") return ExperimentKind::kMargin;
  if (name == "alpha_sweep") return ExperimentKind::kAlphaSweep;
  if (name == "conn_optimize") return ExperimentKind::kConnOptimize;
  throw PreflabError(ErrorCode::kInvalidArgument,
                     fmt::format("unknown experiment '{}'", name));
}

void ValidateExperimentConfig(const ExperimentConfig& config) {
  const auto fail = [](const std::string& message) {
    throw PreflabError(ErrorCode::kInvalidArgument, message);
  };
  if (config.m < 2 || config.d < 1 || config.hidden < 1 || config.embed < 1) {
    fail("m must be >= 2 and d, hidden, embed positive");
  }
  if (config.seeds.empty()) fail("seeds must be nonempty");
  if (config.sweep_n < 1) fail("sweep_n must be positive");
  switch (config.experiment) {
    case ExperimentKind::kMargin:
      if (config.n_grid.empty()) fail("n_grid must be nonempty");
      for (int n : config.n_grid) {
        if (n < 1) fail("n_grid entries must be positive");
      }
      break;
    case ExperimentKind::kAlphaSweep:
      if (config.alpha_grid.empty()) fail("alpha_grid must be nonempty");
      break;
    case ExperimentKind::kConnOptimize:
      if (config.beta_grid.empty()) fail("beta_grid must be nonempty");
      break;
  }
  ValidateTrainConfig(config.train);
}

void WriteRunCsv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << kRunCsvHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.experiment << ',' << r.seed << ',' << r.n << ',' << r.variant
        << ',' << FormatReal(r.accuracy) << ',' << FormatReal(r.acc_bottom10)
        << ',' << FormatReal(r.acc_bottom30) << ','
        << FormatReal(r.lambda_conn) << ',' << FormatReal(r.estimation_error)
        << ',' << FormatReal(r.final_val_loss) << ',' << r.status << '\n';
  }
}

GroundTruth GenGroundTruth(int m, int d, int hidden, int embed,
                           std::uint64_t seed) {
  if (m < 2 || d < 1 || hidden < 1 || embed < 1) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "ground truth dimensions must be positive, m >= 2");
  }
  ItemSet items = ItemSet::Gaussian(m, d, seed);
  ScoreModel model =
      InitModel(ScoreKind::kCosineMlp, ModelDims::CosineMlp(d, hidden, embed),
                DeriveSeed(seed, {StreamLabel("ground_truth")}));
  ScoreTable scores = ComputeScoreTable(model, &items);
  return {std::move(items), std::move(model), std::move(scores)};
}

std::vector<RunRecord> RunMarginExperiment(const ExperimentConfig& config) {
  ValidateExperimentConfig(config);
  const std::vector<GroundTruth> truths = GroundTruths(config);
  const int num_seeds = static_cast<int>(config.seeds.size());
  const int num_n = static_cast<int>(config.n_grid.size());
  const std::vector<std::string> variants = {"raw", "rank"};
  const ScoreTable uniform = UniformNegative(config.m, config.m);
  const auto target = [&](int variant, int s) {
    return variant == 0 ? truths[s].scores : RankNormalize(truths[s].scores);
  };

  // lambda_conn depends on (variant, seed) only.
  std::vector<double> lambda(2 * num_seeds);
  std::vector<RunRecord> records(2 * num_n * num_seeds);
  const int lambda_jobs = 2 * num_seeds;
  ParallelFor(lambda_jobs + static_cast<int>(records.size()), [&](int job) {
    if (job < lambda_jobs) {
      const int variant = job / num_seeds;
      const int s = job % num_seeds;
      lambda[job] = LambdaConn(
          config, truths[s], target(variant, s), uniform,
          DeriveSeed(config.seeds[s], {StreamLabel("margin_conn"),
                                       std::uint64_t(variant)}));
      return;
    }
    const int cell = job - lambda_jobs;
    const int variant = cell / (num_n * num_seeds);
    const int k = (cell / num_seeds) % num_n;
    const int s = cell % num_seeds;
    const int n = config.n_grid[k];
    RunRecord record = TrainCell(
        config, truths[s], target(variant, s), uniform, n,
        DeriveSeed(config.seeds[s], {StreamLabel("margin"), std::uint64_t(n)}));
    record.variant = variants[variant];
    records[cell] = std::move(record);
  });
  for (std::size_t cell = 0; cell < records.size(); ++cell) {
    const int variant = static_cast<int>(cell) / (num_n * num_seeds);
    const int s = static_cast<int>(cell) % num_seeds;
    records[cell].experiment = "margin";
    records[cell].seed = config.seeds[s];
    records[cell].lambda_conn = lambda[variant * num_seeds + s];
  }
  return records;
}

std::vector<RunRecord> RunAlphaSweep(const ExperimentConfig& config) {
  ValidateExperimentConfig(config);
  const std::vector<GroundTruth> truths = GroundTruths(config);
  const int num_seeds = static_cast<int>(config.seeds.size());
  const int num_alpha = static_cast<int>(config.alpha_grid.size());
  std::vector<RunRecord> records(num_alpha * num_seeds);
  ParallelFor(static_cast<int>(records.size()), [&](int cell) {
    const int a = cell / num_seeds;
    const int s = cell % num_seeds;
    const double alpha = config.alpha_grid[a];
    const ScoreTable& target = truths[s].scores;
    const ScoreTable p_minus = AlphaNegative(target, alpha);
    RunRecord record = TrainCell(
        config, truths[s], target, p_minus, config.sweep_n,
        DeriveSeed(config.seeds[s], {StreamLabel("alpha_sweep")}));
    record.lambda_conn = LambdaConn(
        config, truths[s], target, p_minus,
        DeriveSeed(config.seeds[s], {StreamLabel("alpha_conn")}));
    record.experiment = "alpha_sweep";
    record.seed = config.seeds[s];
    record.variant = fmt::format("alpha={:g}", alpha);
    records[cell] = std::move(record);
  });
  return records;
}

std::vector<RunRecord> RunConnOptimize(const ExperimentConfig& config) {
  ValidateExperimentConfig(config);
  const std::vector<GroundTruth> truths = GroundTruths(config);
  const int num_seeds = static_cast<int>(config.seeds.size());
  const int num_beta = static_cast<int>(config.beta_grid.size());
  const ScoreTable uniform = UniformNegative(config.m, config.m);
  // Rows ordered by (beta, variant, seed); one job fills both variants.
  std::vector<RunRecord> records(2 * num_beta * num_seeds);
  ParallelFor(num_beta * num_seeds, [&](int job) {
    const int b = job / num_seeds;
    const int s = job % num_seeds;
    const double beta = config.beta_grid[b];
    const GroundTruth& gt = truths[s];
    const ScoreTable target = ScaleScore(gt.scores, beta);

    GdaConfig gda = config.gda;
    gda.variational = config.connectivity;
    gda.variational.seed =
        DeriveSeed(config.seeds[s], {StreamLabel("conn_optimize_gda")});
    const NegativeOptimizationResult optimized = OptimizeNegativeForConnectivity(
        target, TestDistributionQ::Uniform(config.m, config.m),
        ConnClass(config, gt), gda);

    const std::uint64_t cell_seed =
        DeriveSeed(config.seeds[s], {StreamLabel("conn_optimize")});
    RunRecord base =
        TrainCell(config, gt, target, uniform, config.sweep_n, cell_seed);
    base.lambda_conn = optimized.uniform_baseline.value;
    base.variant = fmt::format("beta={:g}/uniform", beta);
    RunRecord tuned = TrainCell(config, gt, target, optimized.p_minus,
                                config.sweep_n, cell_seed);
    tuned.lambda_conn = optimized.achieved.value;
    tuned.variant = fmt::format("beta={:g}/optimized", beta);
    if (optimized.kept_uniform && tuned.status == "ok") {
      tuned.status = "fallback_uniform";
    }
    for (RunRecord* r : {&base, &tuned}) {
      r->experiment = "conn_optimize";
      r->seed = config.seeds[s];
    }
    records[(2 * b) * num_seeds + s] = std::move(base);
    records[(2 * b + 1) * num_seeds + s] = std::move(tuned);
  });
  return records;
}

std::vector<RunRecord> RunExperiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::kMargin: return RunMarginExperiment(config);
    case ExperimentKind::kAlphaSweep: return RunAlphaSweep(config);
    case ExperimentKind::kConnOptimize: return RunConnOptimize(config);
  }
  throw PreflabError(ErrorCode::kInvalidArgument, "unknown experiment");
}

int WorkerCount() {
  if (const char* env = std::getenv("PREFLAB_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<int>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace preflab
