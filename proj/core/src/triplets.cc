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

#include "preflab/triplets.h"

#include <charconv>
#include <string_view>

#include <fmt/format.h>

#include "preflab/errors.h"

namespace preflab {
namespace {

constexpr std::string_view kHeader = "context_id,pos_id,neg_id";

int ParseField(std::string_view field, int line_number) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw PreflabError(ErrorCode::kIo,
                       fmt::format("dataset CSV line {}: bad integer '{}'",
                                   line_number, field));
  }
  return value;
}

}  // namespace

void ValidateDataset(const TripletDataset& data, int num_contexts,
                     int num_items) {
  if (data.triplets.empty()) {
    throw PreflabError(ErrorCode::kInvalidArgument, "dataset is empty");
  }
  for (size_t k = 0; k < data.triplets.size(); ++k) {
    const Triplet& t = data.triplets[k];
    if (t.context < 0 || t.context >= num_contexts || t.pos < 0 ||
        t.pos >= num_items || t.neg < 0 || t.neg >= num_items) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("triplet {} has an index out of range", k));
    }
    if (t.pos == t.neg) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("triplet {} compares an item to itself", k));
    }
  }
}

void WriteDatasetCsv(const TripletDataset& data, std::ostream& out) {
  out << kHeader << '\n';
  for (const Triplet& t : data.triplets) {
    out << t.context << ',' << t.pos << ',' << t.neg << '\n';
  }
}

TripletDataset ReadDatasetCsv(std::istream& in) {
  TripletDataset data;
  std::string line;
  int line_number = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != kHeader) {
        throw PreflabError(ErrorCode::kIo,
                           fmt::format("dataset CSV must start with '{}'",
                                       kHeader));
      }
      seen_header = true;
      continue;
    }
    std::string_view view(line);
    const size_t first = view.find(',');
    const size_t second =
        first == std::string_view::npos ? first : view.find(',', first + 1);
    if (second == std::string_view::npos) {
      throw PreflabError(ErrorCode::kIo,
                         fmt::format("dataset CSV line {}: expected 3 fields",
                                     line_number));
    }
    Triplet t;
    t.context = ParseField(view.substr(0, first), line_number);
    t.pos = ParseField(view.substr(first + 1, second - first - 1), line_number);
    t.neg = ParseField(view.substr(second + 1), line_number);
    data.triplets.push_back(t);
  }
  if (!seen_header) {
    throw PreflabError(ErrorCode::kIo, "dataset CSV is empty");
  }
  return data;
}

}  // namespace preflab
