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

// Retrieval metrics and code-usage diagnostics.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repconc/index_io.hpp"
#include "repconc/opq.hpp"
#include "repconc/pq.hpp"

namespace repconc {

// A metric averaged over the ranked queries that have at least one relevant
// judgment. Ranked queries without one are excluded and counted.
struct MetricValue {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
};

MetricValue mrr_at_k(const Rankings& rankings, const Qrels& qrels, std::size_t k);
MetricValue recall_at_k(const Rankings& rankings, const Qrels& qrels, std::size_t k);

struct CodeBalance {
  std::size_t num_blocks = 0;
  std::size_t num_centroids = 0;
  // histograms[i][j]: documents whose block-i code is j.
  std::vector<std::vector<std::size_t>> histograms;
  // Shannon entropy in bits, per block.
  std::vector<double> entropy;
  double mean_entropy = 0.0;
  // Per-block usage fractions sorted in descending order, averaged over blocks.
  std::vector<double> sorted_usage;
  // Mean over blocks of the most-used code's share of documents.
  double top1_fraction = 0.0;
};

CodeBalance code_balance(const CodeTable& codes, std::size_t num_centroids);

// Mean of ||R d - reconstruct(code)||^2 over documents.
double mean_distortion(const Matrix& docs, const Rotation& rotation,
                       const Codebook& codebook, const CodeTable& codes);

struct MetricReport {
  std::vector<std::pair<std::size_t, double>> mrr;
  std::vector<std::pair<std::size_t, double>> recall;
  std::size_t queries_evaluated = 0;
  std::size_t queries_excluded = 0;
  std::optional<double> distortion;
  std::optional<CodeBalance> balance;

  std::string to_table() const;
  // Header "metric,cutoff,value".
  std::string to_csv() const;
};

MetricReport evaluate_run(const Rankings& rankings, const Qrels& qrels,
                          const std::vector<std::size_t>& mrr_cutoffs,
                          const std::vector<std::size_t>& recall_cutoffs);

}  // namespace repconc
