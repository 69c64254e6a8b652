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

#include "preflab/item_set.h"

#include <utility>

#include "preflab/errors.h"
#include "preflab/rng.h"

namespace preflab {

ItemSet::ItemSet(Eigen::MatrixXd items) : items_(std::move(items)) {
  if (items_.rows() < 2 || items_.cols() < 1) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "ItemSet needs at least two items of dimension >= 1");
  }
  if (!items_.allFinite()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "ItemSet coordinates must be finite");
  }
}

ItemSet ItemSet::Gaussian(int m, int d, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, {StreamLabel("items")}));
  return ItemSet(GaussianMatrix(m, d, 1.0, rng));
}

}  // namespace preflab
