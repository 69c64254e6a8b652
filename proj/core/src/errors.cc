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

#include "preflab/errors.h"

namespace preflab {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDegenerateDistribution: return "degenerate_distribution";
    case ErrorCode::kInfiniteLogOdds: return "infinite_log_odds";
    case ErrorCode::kScoreRange: return "score_range";
    case ErrorCode::kUndefinedScore: return "undefined_score";
    case ErrorCode::kTrainingDiverged: return "training_diverged";
    case ErrorCode::kUnsupportedSetting: return "unsupported_setting";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kDegenerateClass: return "degenerate_class";
    case ErrorCode::kRejectionLimit: return "rejection_limit";
    case ErrorCode::kUndefinedAccuracy: return "undefined_accuracy";
    case ErrorCode::kEmptySubset: return "empty_subset";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace preflab
