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

#ifndef PREFLAB_TRIPLETS_H_
#define PREFLAB_TRIPLETS_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace preflab {

// One observed comparison: in context `context`, item `pos` was preferred to
// item `neg`.
struct Triplet {
  int context = 0;
  int pos = 0;
  int neg = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletDataset {
  std::vector<Triplet> triplets;
  std::string item_set_ref;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(triplets.size()); }
};

// Throws kInvalidArgument if the dataset is empty, an index falls outside
// [0, num_items) (contexts are checked against `num_contexts`), or a triplet
// has pos == neg.
void ValidateDataset(const TripletDataset& data, int num_contexts,
                     int num_items);

// CSV with header `context_id,pos_id,neg_id`.
void WriteDatasetCsv(const TripletDataset& data, std::ostream& out);
TripletDataset ReadDatasetCsv(std::istream& in);

}  // namespace preflab

#endif  // PREFLAB_TRIPLETS_H_
