// Copyright 2026 The RepCONC Authors.
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

#include <algorithm>
#include <string>
#include <unordered_set>

#include "repconc/training.hpp"

namespace repconc {

std::vector<std::vector<std::uint32_t>> mine_negatives(
    const IvfIndex& index, const Matrix& query_embeddings,
    const std::vector<std::vector<std::uint32_t>>& positives, const MiningOptions& options) {
  if (positives.size() != query_embeddings.rows()) {
    throw DimensionError("mine_negatives: " + std::to_string(positives.size()) +
                         " judgment lists for " + std::to_string(query_embeddings.rows()) +
                         " queries");
  }
  if (options.depth == 0) throw ConfigError("mine_negatives: depth must be positive");
  const std::size_t nprobe = options.nprobe == 0 ? index.num_lists() : options.nprobe;
  const Rng base(options.seed);
  std::vector<std::vector<std::uint32_t>> out(positives.size());
  for (std::size_t q = 0; q < positives.size(); ++q) {
    const std::unordered_set<std::uint32_t> relevant(positives[q].begin(), positives[q].end());
    const auto hits = search(index, query_embeddings.row(q), nprobe, options.depth);
    for (const SearchHit& hit : hits) {
      if (!relevant.contains(hit.doc_id)) out[q].push_back(hit.doc_id);
    }
    if (!out[q].empty()) continue;

    const std::size_t available = index.doc_count() - std::min(index.doc_count(), relevant.size());
    if (available == 0) {
      throw ConfigError("mine_negatives: every document is relevant to query row " +
                        std::to_string(q));
    }
    Rng rng = base.split(q);
    const std::size_t want = std::min(options.fallback_count, available);
    std::unordered_set<std::uint32_t> picked;
    while (out[q].size() < want) {
      const auto doc = static_cast<std::uint32_t>(rng.uniform_index(index.doc_count()));
      if (relevant.contains(doc) || !picked.insert(doc).second) continue;
      out[q].push_back(doc);
    }
  }
  return out;
}

}  // namespace repconc
