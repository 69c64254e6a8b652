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

// JSON text formats for the command-line tools. Matrices are written as
// row-major nested arrays. Parse failures throw PreflabError(kIo) or
// kInvalidArgument for well-formed JSON with invalid content.

#ifndef PREFLAB_JSON_IO_H_
#define PREFLAB_JSON_IO_H_

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "preflab/connectivity.h"
#include "preflab/evaluation.h"
#include "preflab/experiments.h"
#include "preflab/item_set.h"
#include "preflab/representability.h"
#include "preflab/scorers.h"
#include "preflab/tabular_distribution.h"
#include "preflab/training.h"

namespace preflab {

// {"m": .., "d": .., "items": [[..], ..]}
std::string ItemSetToJson(const ItemSet& items);
ItemSet ItemSetFromJson(std::string_view text);

// [[..], ..]
std::string MatrixToJson(const Eigen::MatrixXd& matrix);
Eigen::MatrixXd MatrixFromJson(std::string_view text);

// {"context_marginal": [..], "tables": [[[..]]]}
std::string DistributionToJson(const TabularTripletDistribution& dist);
TabularTripletDistribution DistributionFromJson(std::string_view text);

// {"kind": .., "dims": {..}, "seed": .., "parameters": [..]}
std::string ModelToJson(const ScoreModel& model);
ScoreModel ModelFromJson(std::string_view text);

// {"p_plus": [[..]], "p_minus": [[..]], "context_marginal": [..]}
std::string PairToJson(const ConditionalPair& pair);
ConditionalPair PairFromJson(std::string_view text);

std::string VerdictToJson(const RepresentabilityVerdict& verdict);
std::string TrainResultToJson(const TrainResult& result);
// {"method": .., "value": .., "restarts": .., "per_restart_values": [..]}
std::string ConnEstimateToJson(const ConnEstimate& estimate);
std::string MetricsToJson(const EvaluationMetrics& metrics);

// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig ExperimentConfigFromJson(std::string_view text);
std::string ExperimentConfigToJson(const ExperimentConfig& config);

// Header `epoch,train_loss,val_loss`, epochs numbered from 1.
void WriteHistoryCsv(const std::vector<EpochLosses>& history,
                     std::ostream& out);

}  // namespace preflab

#endif  // PREFLAB_JSON_IO_H_
