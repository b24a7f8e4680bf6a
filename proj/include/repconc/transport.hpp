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

// Balanced code assignment for one sub-vector block of a batch: an
// entropy-regularised transport plan between B documents (unit mass each)
// and K centroids (B/K mass each), solved with log-domain Sinkhorn scaling.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace repconc {

class CostMatrix {
 public:
  CostMatrix(std::size_t batch, std::size_t num_centroids);
  CostMatrix(std::size_t batch, std::size_t num_centroids, std::vector<double> cost);

  std::size_t batch() const noexcept { return batch_; }
  std::size_t num_centroids() const noexcept { return num_centroids_; }
  double at(std::size_t b, std::size_t j) const { return cost_[b * num_centroids_ + j]; }
  double& at(std::size_t b, std::size_t j) { return cost_[b * num_centroids_ + j]; }
  const std::vector<double>& values() const noexcept { return cost_; }
  double mean() const;

 private:
  std::size_t batch_;
  std::size_t num_centroids_;
  std::vector<double> cost_;
};

struct SinkhornOptions {
  // <= 0 selects 0.05 * mean(cost).
  double epsilon = 0.0;
  std::size_t max_iters = 100;
  // <= 0 selects 1e-3 * B / K.
  double tol = 0.0;
  // When false only rows are normalised; the plan's argmax is then the
  // unconstrained argmin of the cost.
  bool balance_columns = true;
};

struct TransportPlan {
  std::size_t batch = 0;
  std::size_t num_centroids = 0;
  std::vector<double> q;
  double epsilon = 0.0;
  double tol = 0.0;
  std::size_t iterations_used = 0;
  // max_j |sum_b q[b][j] - B/K| of the returned plan.
  double marginal_violation = 0.0;
  bool converged = false;

  double at(std::size_t b, std::size_t j) const { return q[b * num_centroids + j]; }
  double row_sum(std::size_t b) const;
  double column_sum(std::size_t j) const;
  // sum_b sum_j q[b][j] * cost[b][j]
  double objective(const CostMatrix& cost) const;
};

TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornOptions& options = {});

struct HardAssignment {
  std::vector<std::uint32_t> codes;
  double total_cost = 0.0;
};

// Exact minimum-cost assignment with exactly B/K rows per centroid, by
// dynamic programming over per-centroid fill counts. Small instances only.
HardAssignment exact_assign(const CostMatrix& cost);

// Row argmax of the plan, ties to the lowest index.
std::vector<std::uint32_t> plan_argmax(const TransportPlan& plan);

struct ConstrainedAssignment {
  std::vector<std::uint32_t> codes;
  TransportPlan plan;
};
ConstrainedAssignment assign_constrained(const CostMatrix& cost,
                                         const SinkhornOptions& options = {});

// Plain per-row argmin (ties to lowest index) with its one-hot plan, used
// when the balance constraint is switched off.
ConstrainedAssignment assign_unconstrained(const CostMatrix& cost);

double assignment_cost(const CostMatrix& cost, const std::vector<std::uint32_t>& codes);

}  // namespace repconc
