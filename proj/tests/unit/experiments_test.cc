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

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "preflab/errors.h"
#include "preflab/experiments.h"

namespace preflab {
namespace {

ExperimentConfig SmallConfig(ExperimentKind kind) {
  ExperimentConfig config;
  config.experiment = kind;
  config.m = 6;
  config.d = 8;
  config.hidden = 4;
  config.embed = 3;
  config.n_grid = {64, 128};
  config.alpha_grid = {-4, 0, 4};
  config.beta_grid = {0.5, 2};
  config.seeds = {0, 1};
  config.sweep_n = 64;
  config.train.epochs = 5;
  config.train.learning_rates = {1e-2};
  config.train.validation_size = 64;
  config.connectivity.restarts = 2;
  config.connectivity.steps = 30;
  config.gda.outer_steps = 3;
  config.gda.inner_steps = 3;
  config.gda.variational = config.connectivity;
  return config;
}

std::string Csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  WriteRunCsv(records, out);
  return out.str();
}

int CountLines(const std::string& text) {
  int lines = 0;
  for (char c : text) lines += c == '\n';
  return lines;
}

TEST(GroundTruthTest, CosineScoresAreBoundedWithUnitDiagonal) {
  const GroundTruth gt = GenGroundTruth(6, 8, 4, 3, 11);
  ASSERT_EQ(gt.scores.rows(), 6);
  ASSERT_EQ(gt.scores.cols(), 6);
  for (int x = 0; x < 6; ++x) {
    EXPECT_NEAR(gt.scores(x, x), 1.0, 1e-9);
    for (int y = 0; y < 6; ++y) {
      EXPECT_LE(std::abs(gt.scores(x, y)), 1.0 + 1e-12);
    }
  }
  EXPECT_EQ(GenGroundTruth(6, 8, 4, 3, 11).scores, gt.scores);
  EXPECT_NE(GenGroundTruth(6, 8, 4, 3, 12).scores, gt.scores);
}

TEST(ExperimentKindTest, RoundTrip) {
  for (auto kind : {ExperimentKind::kMargin, ExperimentKind::kAlphaSweep,
                    ExperimentKind::kConnOptimize}) {
    EXPECT_EQ(ParseExperimentKind(ExperimentKindName(kind)), kind);
  }
  EXPECT_THROW(ParseExperimentKind("bogus"), PreflabError);
}

TEST(ExperimentConfigTest, RejectsEmptyGrids) {
  ExperimentConfig config = SmallConfig(ExperimentKind::kMargin);
  config.seeds.clear();
  EXPECT_THROW(ValidateExperimentConfig(config), PreflabError);
  config = SmallConfig(ExperimentKind::kMargin);
  config.m = 1;
  EXPECT_THROW(ValidateExperimentConfig(config), PreflabError);
}

TEST(RunCsvTest, HeaderAndFormatting) {
  RunRecord record;
  record.experiment = "margin";
  record.seed = 3;
  record.n = 256;
  record.variant = "raw";
  record.accuracy = 0.5;
  const std::string csv = Csv({record});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "experiment,seed,n,variant,accuracy,acc_bottom10,acc_bottom30,"
            "lambda_conn,estimation_error,final_val_loss,status");
  EXPECT_NE(csv.find("margin,3,256,raw,0.5,"), std::string::npos);
  EXPECT_EQ(CountLines(csv), 2);
}

TEST(MarginExperimentTest, RowsCoverGrid) {
  const auto records = RunMarginExperiment(SmallConfig(ExperimentKind::kMargin));
  ASSERT_EQ(records.size(), 2u * 2u * 2u);
  for (const RunRecord& r : records) {
    EXPECT_EQ(r.experiment, "margin");
    EXPECT_TRUE(r.variant == "raw" || r.variant == "rank");
    EXPECT_EQ(r.status, "ok");
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
    EXPECT_GT(r.lambda_conn, 0.0);
  }
}

TEST(AlphaSweepTest, RowsCoverGrid) {
  const auto records = RunAlphaSweep(SmallConfig(ExperimentKind::kAlphaSweep));
  ASSERT_EQ(records.size(), 3u * 2u);
  EXPECT_EQ(records.front().variant, "alpha=-4");
  for (const RunRecord& r : records) EXPECT_EQ(r.n, 64);
}

TEST(ConnOptimizeTest, OptimizedNeverBelowUniform) {
  const auto records =
      RunConnOptimize(SmallConfig(ExperimentKind::kConnOptimize));
  ASSERT_EQ(records.size(), 2u * 2u * 2u);
  for (size_t k = 0; k < records.size(); ++k) {
    const RunRecord& r = records[k];
    if (r.variant.ends_with("/optimized")) {
      const RunRecord* uniform = nullptr;
      for (const RunRecord& u : records) {
        if (u.seed == r.seed &&
            u.variant == r.variant.substr(0, r.variant.find('/')) + "/uniform") {
          uniform = &u;
        }
      }
      ASSERT_NE(uniform, nullptr);
      EXPECT_GE(r.lambda_conn, uniform->lambda_conn);
    }
  }
}

TEST(DeterminismTest, OutputIndependentOfThreadCount) {
  for (auto kind : {ExperimentKind::kMargin, ExperimentKind::kAlphaSweep,
                    ExperimentKind::kConnOptimize}) {
    const ExperimentConfig config = SmallConfig(kind);
    setenv("PREFLAB_THREADS", "1", 1);
    const std::string serial = Csv(RunExperiment(config));
    setenv("PREFLAB_THREADS", "3", 1);
    const std::string parallel = Csv(RunExperiment(config));
    unsetenv("PREFLAB_THREADS");
    EXPECT_EQ(serial, parallel) << ExperimentKindName(kind);
  }
}

TEST(WorkerCountTest, ReadsEnvironment) {
  setenv("PREFLAB_THREADS", "5", 1);
  EXPECT_EQ(WorkerCount(), 5);
  unsetenv("PREFLAB_THREADS");
  EXPECT_GE(WorkerCount(), 1);
}

}  // namespace
}  // namespace preflab
