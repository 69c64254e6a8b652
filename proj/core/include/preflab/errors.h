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

#ifndef PREFLAB_ERRORS_H_
#define PREFLAB_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace preflab {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateDistribution,
  kInfiniteLogOdds,
  kScoreRange,
  kUndefinedScore,
  kTrainingDiverged,
  kUnsupportedSetting,
  kRankDeficient,
  kDegenerateClass,
  kRejectionLimit,
  kUndefinedAccuracy,
  kEmptySubset,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type. The code is
// stable and intended for programmatic dispatch; the message is for humans.
class PreflabError : public std::runtime_error {
 public:
  PreflabError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace preflab

#endif  // PREFLAB_ERRORS_H_
