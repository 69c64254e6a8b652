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

// Seeded synthetic experiments. Contexts and responses share one Gaussian item
// set; the ground-truth score is a frozen random cosine-MLP. Every experiment
// emits one RunRecord per (variant, n, seed) cell. Cells are independent and
// run on a worker pool; records are returned in a fixed key order, so output
// does not depend on scheduling.

#ifndef PREFLAB_EXPERIMENTS_H_
#define PREFLAB_EXPERIMENTS_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "preflab/connectivity.h"
#include "preflab/item_set.h"
#include "preflab/scorers.h"
#include "preflab/training.h"

namespace preflab {

enum class ExperimentKind { kMargin, kAlphaSweep, kConnOptimize };

std::string_view ExperimentKindName(ExperimentKind kind);
// Accepts "margin", "alpha_sweep", "conn_optimize".
ExperimentKind ParseExperimentKind(std::string_view name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kMargin;
  int m = 16;
  int d = 128;
  int hidden = 32;
  int embed = 8;
  std::vector<int> n_grid = {256, 512, 1024, 2048, 4096, 8192};
  std::vector<double> alpha_grid = {-16, -12, -8, -4, 0, 4, 8, 12, 16};
  std::vector<double> beta_grid = {0.25, 0.5, 1, 2, 4, 8};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  // Training-set size for the alpha and beta experiments.
  int sweep_n = 1024;
  TrainConfig train;
  // Hypothesis class used for lambda_conn.
  ScoreKind conn_class = ScoreKind::kCosineMlp;
  VariationalConfig connectivity;
  GdaConfig gda;
  std::string output_path;
};

// Throws kInvalidArgument on empty grids or non-positive sizes.
void ValidateExperimentConfig(const ExperimentConfig& config);

struct RunRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  int n = 0;
  std::string variant;
  double accuracy = 0.0;
  double acc_bottom10 = 0.0;
  double acc_bottom30 = 0.0;
  double lambda_conn = 0.0;
  double estimation_error = 0.0;
  double final_val_loss = 0.0;
  std::string status = "ok";
};

inline constexpr std::string_view kRunCsvHeader =
    "experiment,seed,n,variant,accuracy,acc_bottom10,acc_bottom30,"
    "lambda_conn,estimation_error,final_val_loss,status";

void WriteRunCsv(const std::vector<RunRecord>& records, std::ostream& out);

struct GroundTruth {
  ItemSet items;
  ScoreModel model;
  ScoreTable scores;  // m x m, contexts are the items themselves
};

GroundTruth GenGroundTruth(int m, int d, int hidden, int embed,
                           std::uint64_t seed);

std::vector<RunRecord> RunMarginExperiment(const ExperimentConfig& config);
std::vector<RunRecord> RunAlphaSweep(const ExperimentConfig& config);
std::vector<RunRecord> RunConnOptimize(const ExperimentConfig& config);
// Dispatches on config.experiment.
std::vector<RunRecord> RunExperiment(const ExperimentConfig& config);

// Worker count: PREFLAB_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int WorkerCount();

}  // namespace preflab

#endif  // PREFLAB_EXPERIMENTS_H_
