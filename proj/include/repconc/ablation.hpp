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

// Ablation ladder on the synthetic benchmark: a frozen OPQ warmup, then
// training with unconstrained assignment, with balanced assignment, and
// finally a second stage with dynamic negatives and frozen document codes.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "repconc/synthetic.hpp"
#include "repconc/training.hpp"

namespace repconc {

inline constexpr std::size_t kNumRungs = 4;
inline constexpr std::array<const char*, kNumRungs> kRungNames = {
    "opq_frozen", "clustering", "constraint", "dynamic_negatives"};

struct AblationConfig {
  SyntheticSpec data;
  std::size_t num_blocks = 8;
  std::size_t num_centroids = 16;
  bool rotation = true;
  std::size_t opq_outer_iters = 10;
  std::size_t opq_kmeans_iters = 20;
  std::size_t stage1_steps = 300;
  std::size_t stage2_steps = 300;
  // Shared by all trained rungs; stage and assignment are set per rung.
  TrainConfig train;
  std::size_t cutoff = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

struct AblationRun {
  std::uint64_t seed = 0;
  std::array<double, kNumRungs> mrr{};
  // Corpus code usage after stage-1 training.
  double entropy_unconstrained = 0.0;
  double entropy_constrained = 0.0;
  double top1_unconstrained = 0.0;
  double top1_constrained = 0.0;
  double seconds = 0.0;
};

struct AblationResult {
  std::vector<AblationRun> runs;
  std::array<double, kNumRungs> median{};
  double seconds = 0.0;

  bool monotone() const;
  // Last rung minus the first.
  double gain() const { return median[kNumRungs - 1] - median[0]; }
  // One row per seed and a final "median" row.
  std::string to_csv() const;
};

// MRR@cutoff of `model` on `queries`, searching every document.
double evaluate_mrr(const Model& model, const Matrix& doc_features, const CodeTable& codes,
                    const QuerySet& queries, const Qrels& qrels, std::size_t cutoff);

double median(std::vector<double> values);

AblationResult run_ablation(const AblationConfig& config,
                            const std::function<void(const std::string&)>& log = {});

}  // namespace repconc
