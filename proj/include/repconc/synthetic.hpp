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

// Planted retrieval benchmark: Gaussian clusters of unit-norm documents and
// queries that are noisy copies of a single relevant document.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "repconc/index_io.hpp"
#include "repconc/numerics.hpp"

namespace repconc {

struct SyntheticSpec {
  std::size_t num_docs = 10000;
  std::size_t dim = 32;
  std::size_t num_clusters = 64;
  // Norm of the perturbation added to a document to form its query.
  double noise = 0.1;
  // Norm of the offset of a document from its cluster centre.
  double cluster_spread = 0.5;
  std::size_t train_queries = 4000;
  std::size_t test_queries = 1000;
  std::uint64_t seed = 0;
};

struct SyntheticBenchmark {
  Matrix docs;
  std::vector<std::uint32_t> doc_cluster;
  QuerySet train_queries;
  QuerySet test_queries;
  // relevant[q] is the one relevant document of query row q.
  std::vector<std::uint32_t> train_relevant;
  std::vector<std::uint32_t> test_relevant;

  Qrels train_qrels() const;
  Qrels test_qrels() const;
};

SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec);

}  // namespace repconc
