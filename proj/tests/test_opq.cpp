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

#include <cmath>

#include "fixtures.hpp"
#include "repconc/opq.hpp"

namespace repconc {
namespace {

using testing::random_matrix;

TEST(KMeans, SingleClusterIsGlobalMean) {
  const Matrix p = random_matrix(100, 3, 1);
  const KMeansResult r = kmeans(p, 1, 10, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 100; ++i) mean += p(i, c);
    EXPECT_NEAR(r.centroids(0, c), mean / 100.0, 1e-5);
  }
}

TEST(KMeans, DistinctLocationsAreRecovered) {
  Matrix p(30, 2);
  const float loc[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (std::size_t i = 0; i < 30; ++i) {
    p(i, 0) = loc[i % 3][0];
    p(i, 1) = loc[i % 3][1];
  }
  const KMeansResult r = kmeans(p, 3, 10, 4);
  std::vector<bool> found(3, false);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t l = 0; l < 3; ++l) {
      if (r.centroids(c, 0) == loc[l][0] && r.centroids(c, 1) == loc[l][1]) found[l] = true;
    }
  }
  EXPECT_EQ(found, std::vector<bool>(3, true));
  EXPECT_EQ(r.objective.back(), 0.0);
}

TEST(KMeans, TwoBlobsGiveBlobMeans) {
  const auto blobs = testing::two_blobs(3);
  const KMeansResult r = kmeans(blobs.points, 2, 20, 9);
  const std::size_t first = r.assignment[0];
  for (std::size_t b = 0; b < 2; ++b) {
    const std::size_t c = b == 0 ? first : 1 - first;
    EXPECT_NEAR(r.centroids(c, 0), blobs.mean[b][0], 1e-4);
    EXPECT_NEAR(r.centroids(c, 1), blobs.mean[b][1], 1e-4);
  }
  for (std::size_t i = 0; i < blobs.labels.size(); ++i) {
    EXPECT_EQ(r.assignment[i] == first, blobs.labels[i] == 0);
  }
}

TEST(KMeans, ObjectiveNonIncreasingAndAssignmentNearest) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix p = random_matrix(500, 4, seed);
    const KMeansResult r = kmeans(p, 16, 25, seed);
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      EXPECT_LE(r.objective[i], r.objective[i - 1] + 1e-9);
    }
    for (std::size_t i = 0; i < p.rows(); ++i) {
      EXPECT_EQ(r.assignment[i], nearest_centroid(p.row(i), r.centroids));
    }
  }
}

TEST(KMeans, CentroidsAreMeansAtConvergence) {
  const Matrix p = random_matrix(400, 3, 5);
  const KMeansResult r = kmeans(p, 5, 200, 5);
  ASSERT_TRUE(r.converged);
  for (std::size_t c = 0; c < 5; ++c) {
    double sum[3] = {0, 0, 0};
    std::size_t count = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      if (r.assignment[i] != c) continue;
      ++count;
      for (std::size_t d = 0; d < 3; ++d) sum[d] += p(i, d);
    }
    ASSERT_GT(count, 0U);
    for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(r.centroids(c, d), sum[d] / count, 1e-5);
  }
}

TEST(KMeans, TooFewPointsIsConfigError) {
  EXPECT_THROW(kmeans(random_matrix(3, 2, 1), 4, 5, 0), ConfigError);
}

TEST(KMeans, Deterministic) {
  const Matrix p = random_matrix(300, 4, 8);
  const KMeansResult a = kmeans(p, 8, 10, 42);
  const KMeansResult b = kmeans(p, 8, 10, 42);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignment, b.assignment);
}

TEST(Rotation, ApplyAndValidate) {
  const Rotation none = Rotation::none(3);
  EXPECT_FALSE(none.enabled());
  const std::vector<float> v{1, 2, 3};
  EXPECT_EQ(none.apply(v), v);
  Matrix swap(2, 2);
  swap(0, 1) = 1;
  swap(1, 0) = 1;
  const Rotation r = Rotation::from_matrix(swap);
  EXPECT_EQ(r.apply(std::vector<float>{1, 2}), (std::vector<float>{2, 1}));
  Matrix skew = Matrix::identity(2);
  skew(0, 1) = 0.5F;
  EXPECT_ANY_THROW(Rotation::from_matrix(skew));
}

TEST(Opq, DistortionMonotoneAndRotationOrthonormal) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix docs = random_matrix(600, 16, seed + 20);
    OpqOptions o;
    o.num_blocks = 4;
    o.num_centroids = 16;
    o.seed = seed;
    const OpqResult r = train_opq(docs, o);
    ASSERT_EQ(r.distortion.size(), o.outer_iters);
    for (std::size_t i = 1; i < r.distortion.size(); ++i) {
      EXPECT_LE(r.distortion[i], r.distortion[i - 1] + 1e-6);
    }
    EXPECT_LT(orthonormality_error(MatrixD::cast_from(r.rotation.matrix())), 1e-5);
    EXPECT_NEAR(r.distortion.back(), pq_distortion(docs, r.rotation, r.codebook), 1e-9);
  }
}

TEST(Opq, PlantedRotationIsRecovered) {
  const auto fx = testing::planted_rotation(1);
  OpqOptions o;
  o.num_blocks = fx.num_blocks;
  o.num_centroids = fx.num_centroids;
  o.rotation = false;
  const double planted = train_opq(fx.aligned, o).distortion.back();
  o.rotation = true;
  const double learned = train_opq(fx.rotated, o).distortion.back();
  o.rotation = false;
  const double unrotated = train_opq(fx.rotated, o).distortion.back();
  EXPECT_LE(learned, 1.05 * planted);
  EXPECT_GE(unrotated, learned);
}

TEST(Opq, AlignedCorpusGainsNothingFromRotation) {
  const auto fx = testing::planted_rotation(2);
  OpqOptions o;
  o.num_blocks = fx.num_blocks;
  o.num_centroids = fx.num_centroids;
  o.rotation = false;
  const double plain = train_opq(fx.aligned, o).distortion.back();
  o.rotation = true;
  const double rotated = train_opq(fx.aligned, o).distortion.back();
  EXPECT_LE(plain - rotated, 1e-3);
}

TEST(Opq, ScalarBlocksReachZeroDistortion) {
  Matrix docs(64, 4);
  Rng rng(3);
  for (std::size_t i = 0; i < 64; ++i) {
    for (std::size_t d = 0; d < 4; ++d) docs(i, d) = static_cast<float>(rng.uniform_index(3));
  }
  OpqOptions o;
  o.num_blocks = 4;
  o.num_centroids = 3;
  o.rotation = false;
  EXPECT_NEAR(train_opq(docs, o).distortion.back(), 0.0, 1e-12);
}

TEST(Opq, WithoutRotationItIsPerBlockKMeans) {
  const Matrix docs = random_matrix(300, 8, 4);
  OpqOptions o;
  o.num_blocks = 2;
  o.num_centroids = 8;
  o.outer_iters = 1;
  o.rotation = false;
  o.seed = 6;
  const OpqResult r = train_opq(docs, o);
  EXPECT_FALSE(r.rotation.enabled());
  for (std::size_t b = 0; b < 2; ++b) {
    Matrix block(300, 4);
    for (std::size_t i = 0; i < 300; ++i) {
      for (std::size_t d = 0; d < 4; ++d) block(i, d) = docs(i, b * 4 + d);
    }
    const KMeansResult km = kmeans(block, 8, o.kmeans_iters, Rng(6).split(b).next_u64());
    for (std::size_t j = 0; j < 8; ++j) {
      auto c = r.codebook.centroid(b, j);
      EXPECT_TRUE(std::equal(c.begin(), c.end(), km.centroids.row(j).begin()));
    }
  }
}

TEST(Opq, ShapeErrors) {
  OpqOptions o;
  o.num_blocks = 3;
  o.num_centroids = 4;
  EXPECT_THROW(train_opq(random_matrix(10, 8, 1), o), DimensionError);
  o.num_blocks = 2;
  o.num_centroids = 16;
  EXPECT_THROW(train_opq(random_matrix(10, 8, 1), o), ConfigError);
}

}  // namespace
}  // namespace repconc
