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

#include "repconc/pq.hpp"

#include <string>

#include "repconc/kernels.hpp"

namespace repconc {
namespace {

void check_vector(std::span<const float> v, const Codebook& cb, const char* op) {
  if (v.size() != cb.dim()) {
    throw DimensionError(std::string(op) + ": vector length " +
                         std::to_string(v.size()) + " != codebook dim " +
                         std::to_string(cb.dim()));
  }
}

void check_codes(std::span<const std::uint8_t> codes, const Codebook& cb) {
  if (codes.size() != cb.num_blocks()) {
    throw DimensionError("code sequence length " + std::to_string(codes.size()) +
                         " != M " + std::to_string(cb.num_blocks()));
  }
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] >= cb.num_centroids()) {
      throw CorruptIndexError("codes", "code " + std::to_string(codes[i]) +
                                           " in block " + std::to_string(i) +
                                           " >= K " +
                                           std::to_string(cb.num_centroids()));
    }
  }
}

}  // namespace

void check_pq_shape(std::size_t dim, std::size_t num_blocks,
                    std::size_t num_centroids) {
  if (num_blocks == 0 || dim == 0) {
    throw ConfigError("D and M must be positive (D=" + std::to_string(dim) +
                      ", M=" + std::to_string(num_blocks) + ")");
  }
  if (dim % num_blocks != 0) {
    throw DimensionError("D=" + std::to_string(dim) +
                         " is not divisible by M=" + std::to_string(num_blocks));
  }
  if (num_centroids == 0 || num_centroids > kMaxCentroids) {
    throw ConfigError("K=" + std::to_string(num_centroids) +
                      " must be in [1, 256]");
  }
}

Codebook::Codebook(std::size_t dim, std::size_t num_blocks,
                   std::size_t num_centroids, std::vector<float> centroids)
    : dim_(dim), num_blocks_(num_blocks), num_centroids_(num_centroids) {
  check_pq_shape(dim, num_blocks, num_centroids);
  sub_dim_ = dim / num_blocks;
  if (centroids.size() != num_blocks * num_centroids * sub_dim_) {
    throw DimensionError("codebook payload has " +
                         std::to_string(centroids.size()) + " floats, expected " +
                         std::to_string(num_blocks * num_centroids * sub_dim_));
  }
  for (float c : centroids) {
    if (!std::isfinite(c)) throw InputError("codebook has a non-finite centroid");
  }
  centroids_ = std::move(centroids);
}

Codebook Codebook::zeros(std::size_t dim, std::size_t num_blocks,
                         std::size_t num_centroids) {
  check_pq_shape(dim, num_blocks, num_centroids);
  return Codebook(dim, num_blocks, num_centroids,
                  std::vector<float>(dim * num_centroids, 0.0F));
}

CodeTable::CodeTable(std::size_t rows, std::size_t num_blocks,
                     std::vector<std::uint8_t> bytes)
    : rows_(rows), num_blocks_(num_blocks), bytes_(std::move(bytes)) {
  if (bytes_.size() != rows_ * num_blocks_) {
    throw DimensionError("code table has " + std::to_string(bytes_.size()) +
                         " bytes, expected " + std::to_string(rows_ * num_blocks_));
  }
}

std::vector<std::span<const float>> split(std::span<const float> v,
                                          std::size_t num_blocks) {
  if (num_blocks == 0 || v.size() % num_blocks != 0) {
    throw DimensionError("split: length " + std::to_string(v.size()) +
                         " is not divisible by M=" + std::to_string(num_blocks));
  }
  const std::size_t sub = v.size() / num_blocks;
  std::vector<std::span<const float>> out;
  out.reserve(num_blocks);
  for (std::size_t i = 0; i < num_blocks; ++i) out.push_back(v.subspan(i * sub, sub));
  return out;
}

void quantize_into(std::span<const float> v, const Codebook& cb,
                   std::span<std::uint8_t> out) {
  check_vector(v, cb, "quantize");
  if (out.size() != cb.num_blocks()) throw DimensionError("quantize: output length");
  const auto l2 = kernels::active().l2sqr;
  const std::size_t sub = cb.sub_dim();
  for (std::size_t i = 0; i < cb.num_blocks(); ++i) {
    const float* block = v.data() + i * sub;
    std::size_t best = 0;
    double best_dist = l2(block, cb.centroid(i, 0).data(), sub);
    for (std::size_t j = 1; j < cb.num_centroids(); ++j) {
      const double dist = l2(block, cb.centroid(i, j).data(), sub);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    out[i] = static_cast<std::uint8_t>(best);
  }
}

CodeSequence quantize(std::span<const float> v, const Codebook& cb) {
  CodeSequence out{std::vector<std::uint8_t>(cb.num_blocks())};
  quantize_into(v, cb, out.codes);
  return out;
}

CodeTable quantize_all(const Matrix& vectors, const Codebook& cb) {
  if (vectors.cols() != cb.dim()) {
    throw DimensionError("quantize_all: embedding dim " +
                         std::to_string(vectors.cols()) + " != codebook dim " +
                         std::to_string(cb.dim()));
  }
  CodeTable out(vectors.rows(), cb.num_blocks());
  parallel_for(vectors.rows(), [&](std::size_t r) {
    quantize_into(vectors.row(r), cb, out.row(r));
  });
  return out;
}

void reconstruct_into(std::span<const std::uint8_t> codes, const Codebook& cb,
                      std::span<float> out) {
  check_codes(codes, cb);
  if (out.size() != cb.dim()) throw DimensionError("reconstruct: output length");
  const std::size_t sub = cb.sub_dim();
  for (std::size_t i = 0; i < cb.num_blocks(); ++i) {
    auto c = cb.centroid(i, codes[i]);
    std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>(i * sub));
  }
}

std::vector<float> reconstruct(std::span<const std::uint8_t> codes,
                               const Codebook& cb) {
  std::vector<float> out(cb.dim());
  reconstruct_into(codes, cb, out);
  return out;
}

AdcTable adc_table(std::span<const float> q, const Codebook& cb) {
  check_vector(q, cb, "adc_table");
  AdcTable table(cb.num_blocks(), cb.num_centroids());
  const auto dot = kernels::active().dot;
  const std::size_t sub = cb.sub_dim();
  for (std::size_t i = 0; i < cb.num_blocks(); ++i) {
    const float* block = q.data() + i * sub;
    for (std::size_t j = 0; j < cb.num_centroids(); ++j) {
      table.at(i, j) = dot(block, cb.centroid(i, j).data(), sub);
    }
  }
  return table;
}

double adc_score(const AdcTable& table, std::span<const std::uint8_t> codes) {
  if (codes.size() != table.num_blocks()) {
    throw DimensionError("adc_score: code length " + std::to_string(codes.size()) +
                         " != M " + std::to_string(table.num_blocks()));
  }
  double out = 0.0;
  kernels::scalar_kernels().adc_scan(table.values().data(), table.num_blocks(),
                                     table.num_centroids(), codes.data(), 1, &out);
  return out;
}

void adc_scan(const AdcTable& table, std::span<const std::uint8_t> codes,
              std::span<double> out) {
  const std::size_t m = table.num_blocks();
  if (codes.size() != out.size() * m) {
    throw DimensionError("adc_scan: " + std::to_string(codes.size()) +
                         " code bytes for " + std::to_string(out.size()) +
                         " documents with M=" + std::to_string(m));
  }
  kernels::active().adc_scan(table.values().data(), m, table.num_centroids(),
                             codes.data(), out.size(), out.data());
}

double quantization_error(std::span<const float> v,
                          std::span<const std::uint8_t> codes,
                          const Codebook& cb) {
  check_vector(v, cb, "quantization_error");
  check_codes(codes, cb);
  const std::size_t sub = cb.sub_dim();
  double total = 0.0;
  for (std::size_t i = 0; i < cb.num_blocks(); ++i) {
    total += squared_l2(v.subspan(i * sub, sub), cb.centroid(i, codes[i]));
  }
  return total;
}

}  // namespace repconc
