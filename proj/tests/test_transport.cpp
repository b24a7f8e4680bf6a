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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "repconc/error.hpp"
#include "repconc/numerics.hpp"
#include "repconc/transport.hpp"
#include "transport_oracle.hpp"

namespace repconc {
namespace {

CostMatrix random_cost(std::size_t b, std::size_t k, Rng& rng) {
  CostMatrix c(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) c.at(i, j) = rng.uniform();
  }
  return c;
}

// Enumerates every assignment with exactly B/K rows per centroid.
double brute_force_balanced(const CostMatrix& c, std::vector<std::uint32_t>* best_codes) {
  const std::size_t b = c.batch();
  const std::size_t k = c.num_centroids();
  const std::size_t cap = b / k;
  std::vector<std::uint32_t> codes(b);
  std::vector<std::size_t> fill(k, 0);
  double best = INFINITY;
  std::function<void(std::size_t, double)> go = [&](std::size_t row, double acc) {
    if (row == b) {
      if (acc < best) {
        best = acc;
        if (best_codes != nullptr) *best_codes = codes;
      }
      return;
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (fill[j] == cap) continue;
      ++fill[j];
      codes[row] = static_cast<std::uint32_t>(j);
      go(row + 1, acc + c.at(row, j));
      --fill[j];
    }
  };
  go(0, 0.0);
  return best;
}

TEST(CostMatrix, ShapeAndMean) {
  const CostMatrix c(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(c.at(1, 0), 3.0);
  EXPECT_EQ(c.mean(), 2.5);
  EXPECT_THROW(CostMatrix(2, 2, {1, 2, 3}), DimensionError);
}

TEST(Sinkhorn, ZeroCostGivesUniformPlan) {
  const TransportPlan p = sinkhorn(CostMatrix(4, 4));
  for (double v : p.q) EXPECT_NEAR(v, 0.25, 1e-12);
  EXPECT_TRUE(p.converged);
  EXPECT_EQ(p.epsilon, 1.0);
}

TEST(Sinkhorn, TwoByTwoPicksTheCheaperPermutation) {
  const CostMatrix c(2, 2, {0.1, 0.9, 0.2, 0.3});
  SinkhornOptions o;
  o.epsilon = 0.01;
  o.max_iters = 1000;
  const ConstrainedAssignment a = assign_constrained(c, o);
  EXPECT_EQ(a.codes, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_NEAR(assignment_cost(c, a.codes), 0.4, 1e-12);
}

TEST(Sinkhorn, DefaultsFollowTheCostScale) {
  Rng rng(1);
  const CostMatrix c = random_cost(8, 4, rng);
  const TransportPlan p = sinkhorn(c);
  EXPECT_NEAR(p.epsilon, 0.05 * c.mean(), 1e-15);
  EXPECT_NEAR(p.tol, 1e-3 * 2.0, 1e-15);
  EXPECT_LE(p.iterations_used, 100U);
}

TEST(Sinkhorn, RowsExactAndColumnsWithinTolerance) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + rng.uniform_index(6);
    const std::size_t b = k * (1 + rng.uniform_index(8));
    const CostMatrix c = random_cost(b, k, rng);
    SinkhornOptions o;
    o.max_iters = 2000;
    const TransportPlan p = sinkhorn(c, o);
    for (std::size_t i = 0; i < b; ++i) EXPECT_NEAR(p.row_sum(i), 1.0, 1e-6);
    for (double v : p.q) EXPECT_GE(v, 0.0);
    if (p.converged) {
      for (std::size_t j = 0; j < k; ++j) {
        EXPECT_LT(std::abs(p.column_sum(j) - static_cast<double>(b) / k), p.tol);
      }
    }
    EXPECT_LE(p.marginal_violation, p.tol + (p.converged ? 0.0 : INFINITY));
  }
}

TEST(Sinkhorn, ConstantShiftLeavesPlanUnchanged) {
  Rng rng(3);
  const CostMatrix c = random_cost(6, 3, rng);
  CostMatrix shifted = c;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 3; ++j) shifted.at(i, j) += 7.0;
  }
  SinkhornOptions o;
  o.epsilon = 0.05;
  const TransportPlan a = sinkhorn(c, o);
  const TransportPlan b = sinkhorn(shifted, o);
  for (std::size_t i = 0; i < a.q.size(); ++i) EXPECT_NEAR(a.q[i], b.q[i], 1e-6);
}

TEST(Sinkhorn, WithoutColumnScalingArgmaxIsArgmin) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const CostMatrix c = random_cost(9, 4, rng);
    SinkhornOptions o;
    o.balance_columns = false;
    const TransportPlan p = sinkhorn(c, o);
    EXPECT_EQ(plan_argmax(p), assign_unconstrained(c).codes);
  }
}

TEST(Sinkhorn, RelaxedObjectiveBoundedByExactPlusEntropy) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const CostMatrix c = random_cost(4, 2, rng);
    SinkhornOptions o;
    o.epsilon = 0.02;
    o.max_iters = 5000;
    o.tol = 1e-9;
    const TransportPlan p = sinkhorn(c, o);
    const double exact = exact_assign(c).total_cost;
    EXPECT_LE(p.objective(c), exact + o.epsilon * 4.0 * std::log(2.0) + 1e-6);
  }
}

TEST(Sinkhorn, WellSeparatedBalancedCostsMatchArgmin) {
  // Each row's best centroid is distinct and far ahead of the rest.
  CostMatrix c(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) c.at(i, j) = i == j ? 0.0 : 5.0;
  }
  EXPECT_EQ(assign_constrained(c).codes, assign_unconstrained(c).codes);
}

TEST(Sinkhorn, SharedFavouriteIsSpreadOut) {
  // Every row prefers centroid 0; balance forces a permutation.
  CostMatrix c(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) c.at(i, j) = (j == 0 ? 0.0 : 1.0) + 0.3 * i * j;
  }
  SinkhornOptions o;
  o.epsilon = 0.01;
  o.max_iters = 5000;
  const ConstrainedAssignment a = assign_constrained(c, o);
  std::vector<std::uint32_t> sorted = a.codes;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<std::uint32_t>{0, 1, 2, 3}));
  EXPECT_EQ(a.codes, exact_assign(c).codes);
}

TEST(Sinkhorn, InputErrors) {
  CostMatrix c(2, 2, {0.1, 0.2, 0.3, 0.4});
  c.at(0, 1) = -1.0;
  EXPECT_THROW(sinkhorn(c), InputError);
  c.at(0, 1) = NAN;
  EXPECT_THROW(sinkhorn(c), InputError);
  c.at(0, 1) = INFINITY;
  EXPECT_THROW(sinkhorn(c), InputError);
  EXPECT_THROW(sinkhorn(CostMatrix(0, 2)), ConfigError);
}

TEST(Sinkhorn, UnderflowNamesEpsilon) {
  const CostMatrix c(2, 2, {1e300, 1e300, 0.0, 1.0});
  SinkhornOptions o;
  o.epsilon = 1e-300;
  try {
    sinkhorn(c, o);
    FAIL() << "expected UnderflowError";
  } catch (const UnderflowError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
}

TEST(ExactAssign, TwoByTwoExample) {
  const HardAssignment h = exact_assign(CostMatrix(2, 2, {0.1, 0.9, 0.2, 0.3}));
  EXPECT_EQ(h.codes, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_NEAR(h.total_cost, 0.4, 1e-12);
}

TEST(ExactAssign, ZeroPerRowPermutation) {
  CostMatrix c(3, 3);
  const std::uint32_t perm[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) c.at(i, j) = j == perm[i] ? 0.0 : 1.0 + i + j;
  }
  const HardAssignment h = exact_assign(c);
  EXPECT_EQ(h.codes, (std::vector<std::uint32_t>{2, 0, 1}));
  EXPECT_EQ(h.total_cost, 0.0);
}

TEST(ExactAssign, MatchesEnumeration) {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + rng.uniform_index(4);
    const std::size_t b = k * (1 + rng.uniform_index(12 / k));
    const CostMatrix c = random_cost(b, k, rng);
    std::vector<std::uint32_t> codes;
    const double best = brute_force_balanced(c, &codes);
    const HardAssignment h = exact_assign(c);
    EXPECT_NEAR(h.total_cost, best, 1e-12);
    EXPECT_NEAR(assignment_cost(c, h.codes), best, 1e-12);
    std::vector<std::size_t> fill(k, 0);
    for (auto code : h.codes) ++fill[code];
    for (std::size_t f : fill) EXPECT_EQ(f, b / k);
  }
}

TEST(ExactAssign, Errors) {
  EXPECT_THROW(exact_assign(CostMatrix(3, 2)), ConfigError);
  EXPECT_THROW(exact_assign(CostMatrix(14, 2)), ConfigError);
}

TEST(Unconstrained, ArgminWithLowestIndexTies) {
  const CostMatrix c(2, 3, {0.5, 0.5, 0.7, 0.9, 0.1, 0.1});
  const ConstrainedAssignment a = assign_unconstrained(c);
  EXPECT_EQ(a.codes, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_NEAR(a.plan.marginal_violation, 2.0 / 3.0, 1e-12);
}

TEST(Oracle, SeparatedCostsAgreeWithExactAssignment) {
  const testing::OracleStats s = testing::transport_oracle(300, 11, 0.001, 5000);
  EXPECT_GE(s.exact_match, 285U);
  EXPECT_EQ(s.within_cost, s.trials);
  EXPECT_EQ(s.converged, s.trials);
}

TEST(Oracle, SeparatedCostsHaveTheRequestedGap) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const CostMatrix c = testing::separated_cost(rng);
    EXPECT_LE(c.batch(), 8U);
    EXPECT_LE(c.num_centroids(), 4U);
    EXPECT_EQ(c.batch() % c.num_centroids(), 0U);
    for (std::size_t i = 0; i < c.batch(); ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < c.num_centroids(); ++j) row.push_back(c.at(i, j));
      std::sort(row.begin(), row.end());
      for (std::size_t j = 1; j < row.size(); ++j) EXPECT_GE(row[j] - row[j - 1], 0.1 - 1e-12);
    }
  }
}

}  // namespace
}  // namespace repconc
