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

// Unsupervised warmup: Lloyd k-means and non-parametric OPQ (alternating
// per-block k-means and an orthogonal Procrustes rotation update).

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "repconc/numerics.hpp"
#include "repconc/pq.hpp"

namespace repconc {

struct KMeansResult {
  Matrix centroids;
  std::vector<std::uint32_t> assignment;
  // Total squared distance after each assignment step.
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
};

// k-means++ seeding followed by at most `iters` Lloyd iterations. Empty
// clusters are re-seeded from the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::size_t iters,
                    std::uint64_t seed);

// Lloyd iterations from the given centroids.
KMeansResult kmeans_from(const Matrix& points, Matrix initial, std::size_t iters);

// Nearest centroid by squared L2, ties to the lowest index.
std::uint32_t nearest_centroid(std::span<const float> point, const Matrix& centroids,
                               double* distance = nullptr);

class Rotation {
 public:
  Rotation() = default;
  // Disabled rotation of dimension `dim` (acts as identity).
  static Rotation none(std::size_t dim);
  static Rotation from_matrix(Matrix r);

  bool enabled() const noexcept { return enabled_; }
  std::size_t dim() const noexcept { return dim_; }
  const Matrix& matrix() const noexcept { return r_; }

  // out = R * in, or a copy when disabled.
  void apply(std::span<const float> in, std::span<float> out) const;
  std::vector<float> apply(std::span<const float> in) const;
  Matrix apply_rows(const Matrix& rows) const;

  bool operator==(const Rotation&) const = default;

 private:
  std::size_t dim_ = 0;
  bool enabled_ = false;
  Matrix r_;
};

struct OpqOptions {
  std::size_t num_blocks = 8;
  std::size_t num_centroids = 256;
  std::size_t outer_iters = 10;
  std::size_t kmeans_iters = 20;
  bool rotation = true;
  std::uint64_t seed = 0;
};

struct OpqResult {
  Rotation rotation;
  Codebook codebook;
  // Mean per-vector distortion ||R d - d_hat||^2 after each outer iteration.
  std::vector<double> distortion;
};

OpqResult train_opq(const Matrix& docs, const OpqOptions& options);

// Mean ||R d - reconstruct(quantize(R d))||^2 over rows.
double pq_distortion(const Matrix& docs, const Rotation& rotation,
                     const Codebook& codebook);

}  // namespace repconc
