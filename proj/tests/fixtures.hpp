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

// Planted corpora shared by the unit and acceptance tests.

#pragma once

#include <cstdint>

#include "repconc/opq.hpp"
#include "test_util.hpp"

namespace repconc::testing {

struct PlantedRotation {
  Matrix aligned;  // clusters aligned with the block axes
  Matrix rotated;  // the same corpus after the planted rotation
  Rotation planted;
  std::size_t num_blocks = 0;
  std::size_t num_centroids = 0;
};

// Each block's sub-vector is a corner of a scaled hypercube plus small noise,
// so every block holds 2^(D/M) axis-aligned clusters. Blocks get distinct
// scales, which makes the block subspaces identifiable after rotation.
inline PlantedRotation planted_rotation(std::uint64_t seed, std::size_t dim = 16,
                                        std::size_t num_blocks = 4, std::size_t rows = 4000) {
  const std::size_t sub = dim / num_blocks;
  const std::size_t k = std::size_t{1} << sub;
  Rng rng(seed);
  PlantedRotation out;
  out.aligned = Matrix(rows, dim);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t b = 0; b < num_blocks; ++b) {
      const double scale = 1.0 + 0.5 * static_cast<double>(num_blocks - 1 - b);
      const auto corner = rng.uniform_index(k);
      for (std::size_t t = 0; t < sub; ++t) {
        const double sign = ((corner >> t) & 1U) != 0 ? 1.0 : -1.0;
        out.aligned(n, b * sub + t) = static_cast<float>(scale * sign + 0.05 * rng.normal());
      }
    }
  }
  out.planted = Rotation::from_matrix(random_rotation(dim, seed + 7));
  out.rotated = out.planted.apply_rows(out.aligned);
  out.num_blocks = num_blocks;
  out.num_centroids = k;
  return out;
}

// Two well-separated Gaussian blobs in 2-D; labels[i] names the blob.
struct TwoBlobs {
  Matrix points;
  std::vector<std::uint32_t> labels;
  float mean[2][2];
};

inline TwoBlobs two_blobs(std::uint64_t seed, std::size_t per_blob = 200) {
  Rng rng(seed);
  TwoBlobs out{Matrix(2 * per_blob, 2), {}, {{-5.0F, 0.0F}, {5.0F, 1.0F}}};
  double sums[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const std::uint32_t blob = i < per_blob ? 0 : 1;
    out.labels.push_back(blob);
    for (std::size_t c = 0; c < 2; ++c) {
      const float v = static_cast<float>(
          (blob == 0 ? (c == 0 ? -5.0 : 0.0) : (c == 0 ? 5.0 : 1.0)) + 0.3 * rng.normal());
      out.points(i, c) = v;
      sums[blob][c] += v;
    }
  }
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t c = 0; c < 2; ++c) {
      out.mean[b][c] = static_cast<float>(sums[b][c] / static_cast<double>(per_blob));
    }
  }
  return out;
}

}  // namespace repconc::testing
