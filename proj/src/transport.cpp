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

#include "repconc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "repconc/error.hpp"

namespace repconc {
namespace {

double log_sum_exp(const double* values, std::size_t n, std::size_t stride,
                   const double* shift, std::size_t shift_stride) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    peak = std::max(peak, values[i * stride] + shift[i * shift_stride]);
  }
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::exp(values[i * stride] + shift[i * shift_stride] - peak);
  }
  return peak + std::log(acc);
}

void fill_plan(const std::vector<double>& log_kernel, const std::vector<double>& f,
               const std::vector<double>& g, TransportPlan& plan) {
  const std::size_t k = plan.num_centroids;
  for (std::size_t b = 0; b < plan.batch; ++b) {
    for (std::size_t j = 0; j < k; ++j) {
      plan.q[b * k + j] = std::exp(log_kernel[b * k + j] + f[b] + g[j]);
    }
  }
}

double column_violation(const TransportPlan& plan) {
  const double target =
      static_cast<double>(plan.batch) / static_cast<double>(plan.num_centroids);
  double worst = 0.0;
  for (std::size_t j = 0; j < plan.num_centroids; ++j) {
    worst = std::max(worst, std::abs(plan.column_sum(j) - target));
  }
  return worst;
}

}  // namespace

CostMatrix::CostMatrix(std::size_t batch, std::size_t num_centroids)
    : batch_(batch), num_centroids_(num_centroids), cost_(batch * num_centroids, 0.0) {}

CostMatrix::CostMatrix(std::size_t batch, std::size_t num_centroids,
                       std::vector<double> cost)
    : batch_(batch), num_centroids_(num_centroids), cost_(std::move(cost)) {
  if (cost_.size() != batch_ * num_centroids_) {
    throw DimensionError("cost matrix has " + std::to_string(cost_.size()) +
                         " entries, expected " + std::to_string(batch_) + "x" +
                         std::to_string(num_centroids_));
  }
}

double CostMatrix::mean() const {
  if (cost_.empty()) return 0.0;
  double total = 0.0;
  for (double c : cost_) total += c;
  return total / static_cast<double>(cost_.size());
}

double TransportPlan::row_sum(std::size_t b) const {
  double total = 0.0;
  for (std::size_t j = 0; j < num_centroids; ++j) total += at(b, j);
  return total;
}

double TransportPlan::column_sum(std::size_t j) const {
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) total += at(b, j);
  return total;
}

double TransportPlan::objective(const CostMatrix& cost) const {
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < num_centroids; ++j) total += at(b, j) * cost.at(b, j);
  }
  return total;
}

TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornOptions& options) {
  const std::size_t batch = cost.batch();
  const std::size_t k = cost.num_centroids();
  if (batch == 0 || k == 0) throw ConfigError("sinkhorn: empty cost matrix");
  for (double c : cost.values()) {
    if (!std::isfinite(c)) throw InputError("sinkhorn: non-finite cost entry");
    if (c < 0.0) throw InputError("sinkhorn: negative cost entry");
  }
  if (std::isnan(options.epsilon) || std::isnan(options.tol)) {
    throw InputError("sinkhorn: epsilon and tol must be numbers");
  }

  TransportPlan plan;
  plan.batch = batch;
  plan.num_centroids = k;
  plan.q.assign(batch * k, 0.0);
  plan.epsilon = options.epsilon;
  if (plan.epsilon <= 0.0) {
    const double mean = cost.mean();
    plan.epsilon = mean > 0.0 ? 0.05 * mean : 1.0;
  }
  const double column_mass = static_cast<double>(batch) / static_cast<double>(k);
  plan.tol = options.tol > 0.0 ? options.tol : 1e-3 * column_mass;

  std::vector<double> log_kernel(batch * k);
  for (std::size_t b = 0; b < batch; ++b) {
    double row_peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double v = -cost.at(b, j) / plan.epsilon;
      log_kernel[b * k + j] = v;
      row_peak = std::max(row_peak, v);
    }
    if (!std::isfinite(row_peak)) {
      throw UnderflowError("sinkhorn: row " + std::to_string(b) +
                           " underflows for epsilon=" + std::to_string(plan.epsilon) +
                           "; use a larger epsilon");
    }
  }

  std::vector<double> f(batch, 0.0);
  std::vector<double> g(k, 0.0);
  const double log_column_mass = std::log(column_mass);
  auto update_rows = [&] {
    for (std::size_t b = 0; b < batch; ++b) {
      f[b] = -log_sum_exp(&log_kernel[b * k], k, 1, g.data(), 1);
    }
  };

  if (!options.balance_columns) {
    update_rows();
    fill_plan(log_kernel, f, g, plan);
    plan.iterations_used = 1;
    plan.marginal_violation = column_violation(plan);
    plan.converged = plan.marginal_violation < plan.tol;
    return plan;
  }

  const std::size_t max_iters = std::max<std::size_t>(1, options.max_iters);
  for (std::size_t it = 0; it < max_iters; ++it) {
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = log_column_mass - log_sum_exp(&log_kernel[j], batch, k, f.data(), 1);
    }
    update_rows();
    fill_plan(log_kernel, f, g, plan);
    plan.iterations_used = it + 1;
    plan.marginal_violation = column_violation(plan);
    if (plan.marginal_violation < plan.tol) {
      plan.converged = true;
      break;
    }
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (!std::isfinite(f[b])) {
      throw UnderflowError("sinkhorn: row scaling diverged; use a larger epsilon");
    }
  }
  return plan;
}

std::vector<std::uint32_t> plan_argmax(const TransportPlan& plan) {
  std::vector<std::uint32_t> codes(plan.batch, 0);
  for (std::size_t b = 0; b < plan.batch; ++b) {
    double best = plan.at(b, 0);
    for (std::size_t j = 1; j < plan.num_centroids; ++j) {
      if (plan.at(b, j) > best) {
        best = plan.at(b, j);
        codes[b] = static_cast<std::uint32_t>(j);
      }
    }
  }
  return codes;
}

ConstrainedAssignment assign_constrained(const CostMatrix& cost,
                                         const SinkhornOptions& options) {
  ConstrainedAssignment out;
  out.plan = sinkhorn(cost, options);
  out.codes = plan_argmax(out.plan);
  return out;
}

ConstrainedAssignment assign_unconstrained(const CostMatrix& cost) {
  const std::size_t batch = cost.batch();
  const std::size_t k = cost.num_centroids();
  ConstrainedAssignment out;
  out.codes.assign(batch, 0);
  out.plan.batch = batch;
  out.plan.num_centroids = k;
  out.plan.q.assign(batch * k, 0.0);
  out.plan.iterations_used = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (cost.at(b, j) < cost.at(b, best)) best = j;
    }
    out.codes[b] = static_cast<std::uint32_t>(best);
    out.plan.q[b * k + best] = 1.0;
  }
  if (batch > 0 && k > 0) {
    out.plan.tol = 1e-3 * static_cast<double>(batch) / static_cast<double>(k);
    out.plan.marginal_violation = column_violation(out.plan);
    out.plan.converged = out.plan.marginal_violation < out.plan.tol;
  }
  return out;
}

double assignment_cost(const CostMatrix& cost, const std::vector<std::uint32_t>& codes) {
  if (codes.size() != cost.batch()) throw DimensionError("assignment_cost: length");
  double total = 0.0;
  for (std::size_t b = 0; b < codes.size(); ++b) total += cost.at(b, codes[b]);
  return total;
}

HardAssignment exact_assign(const CostMatrix& cost) {
  constexpr std::size_t kMaxBatch = 12;
  const std::size_t batch = cost.batch();
  const std::size_t k = cost.num_centroids();
  if (k == 0 || batch == 0) throw ConfigError("exact_assign: empty cost matrix");
  if (batch % k != 0) {
    throw ConfigError("exact_assign: B=" + std::to_string(batch) +
                      " is not divisible by K=" + std::to_string(k));
  }
  if (batch > kMaxBatch) {
    throw ConfigError("exact_assign: B=" + std::to_string(batch) +
                      " exceeds the exact-solver limit of 12");
  }
  const std::size_t cap = batch / k;
  // Fill counts per centroid in mixed radix (cap + 1).
  std::vector<std::size_t> radix(k, 1);
  for (std::size_t j = 1; j < k; ++j) radix[j] = radix[j - 1] * (cap + 1);
  const std::size_t states = radix[k - 1] * (cap + 1);
  std::vector<double> memo(states, 0.0);
  std::vector<char> solved(states, 0);
  std::vector<std::uint32_t> choice(states, 0);

  auto count_of = [&](std::size_t state, std::size_t j) {
    return (state / radix[j]) % (cap + 1);
  };
  // Rows are filled in order; the row index is implied by the total count.
  auto solve = [&](auto&& self, std::size_t state, std::size_t row) -> double {
    if (row == batch) return 0.0;
    if (solved[state] != 0) return memo[state];
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_j = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (count_of(state, j) == cap) continue;
      const double value = cost.at(row, j) + self(self, state + radix[j], row + 1);
      if (value < best) {
        best = value;
        best_j = static_cast<std::uint32_t>(j);
      }
    }
    memo[state] = best;
    solved[state] = 1;
    choice[state] = best_j;
    return best;
  };

  HardAssignment out;
  out.total_cost = solve(solve, 0, 0);
  out.codes.resize(batch);
  std::size_t state = 0;
  for (std::size_t row = 0; row < batch; ++row) {
    const std::uint32_t j = choice[state];
    out.codes[row] = j;
    state += radix[j];
  }
  return out;
}

}  // namespace repconc
