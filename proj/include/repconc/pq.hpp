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

// Product quantization: M sub-vector blocks, K centroids per block, one byte
// per block code. Similarity is the inner product; squared L2 is only used
// to pick codes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "repconc/numerics.hpp"

namespace repconc {

inline constexpr std::size_t kMaxCentroids = 256;

class Codebook {
 public:
  Codebook() = default;
  // centroids laid out block-major: block i, centroid j, then D/M floats.
  Codebook(std::size_t dim, std::size_t num_blocks, std::size_t num_centroids,
           std::vector<float> centroids);
  static Codebook zeros(std::size_t dim, std::size_t num_blocks,
                        std::size_t num_centroids);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_blocks() const noexcept { return num_blocks_; }
  std::size_t num_centroids() const noexcept { return num_centroids_; }
  std::size_t sub_dim() const noexcept { return sub_dim_; }

  std::span<const float> centroid(std::size_t block, std::size_t j) const {
    return {centroids_.data() + (block * num_centroids_ + j) * sub_dim_, sub_dim_};
  }
  std::span<float> centroid(std::size_t block, std::size_t j) {
    return {centroids_.data() + (block * num_centroids_ + j) * sub_dim_, sub_dim_};
  }
  std::span<const float> data() const noexcept { return centroids_; }
  std::span<float> data() noexcept { return centroids_; }

  bool operator==(const Codebook&) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t num_blocks_ = 0;
  std::size_t num_centroids_ = 0;
  std::size_t sub_dim_ = 0;
  std::vector<float> centroids_;
};

// Validates D % M == 0 and 1 <= K <= 256.
void check_pq_shape(std::size_t dim, std::size_t num_blocks,
                    std::size_t num_centroids);

// Zero-based codes, one byte per block.
struct CodeSequence {
  std::vector<std::uint8_t> codes;

  std::size_t size() const noexcept { return codes.size(); }
  std::uint8_t operator[](std::size_t i) const { return codes[i]; }
  bool operator==(const CodeSequence&) const = default;
};

// Codes of many documents, row-major with stride M.
class CodeTable {
 public:
  CodeTable() = default;
  CodeTable(std::size_t rows, std::size_t num_blocks)
      : rows_(rows), num_blocks_(num_blocks), bytes_(rows * num_blocks, 0) {}
  CodeTable(std::size_t rows, std::size_t num_blocks,
            std::vector<std::uint8_t> bytes);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t num_blocks() const noexcept { return num_blocks_; }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {bytes_.data() + r * num_blocks_, num_blocks_};
  }
  std::span<std::uint8_t> row(std::size_t r) {
    return {bytes_.data() + r * num_blocks_, num_blocks_};
  }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  bool operator==(const CodeTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t num_blocks_ = 0;
  std::vector<std::uint8_t> bytes_;
};

// Per-query lookup table of <q_i, c_ij>, M x K.
class AdcTable {
 public:
  AdcTable(std::size_t num_blocks, std::size_t num_centroids)
      : num_blocks_(num_blocks),
        num_centroids_(num_centroids),
        values_(num_blocks * num_centroids, 0.0) {}

  std::size_t num_blocks() const noexcept { return num_blocks_; }
  std::size_t num_centroids() const noexcept { return num_centroids_; }
  double at(std::size_t block, std::size_t j) const {
    return values_[block * num_centroids_ + j];
  }
  double& at(std::size_t block, std::size_t j) {
    return values_[block * num_centroids_ + j];
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t num_blocks_;
  std::size_t num_centroids_;
  std::vector<double> values_;
};

std::vector<std::span<const float>> split(std::span<const float> v,
                                          std::size_t num_blocks);

CodeSequence quantize(std::span<const float> v, const Codebook& cb);
void quantize_into(std::span<const float> v, const Codebook& cb,
                   std::span<std::uint8_t> out);
// Quantizes every row of `vectors`.
CodeTable quantize_all(const Matrix& vectors, const Codebook& cb);

std::vector<float> reconstruct(std::span<const std::uint8_t> codes,
                               const Codebook& cb);
inline std::vector<float> reconstruct(const CodeSequence& codes,
                                      const Codebook& cb) {
  return reconstruct(std::span<const std::uint8_t>(codes.codes), cb);
}
void reconstruct_into(std::span<const std::uint8_t> codes, const Codebook& cb,
                      std::span<float> out);

AdcTable adc_table(std::span<const float> q, const Codebook& cb);
double adc_score(const AdcTable& table, std::span<const std::uint8_t> codes);
inline double adc_score(const AdcTable& table, const CodeSequence& codes) {
  return adc_score(table, std::span<const std::uint8_t>(codes.codes));
}
// Scores n documents whose codes are packed with stride M.
void adc_scan(const AdcTable& table, std::span<const std::uint8_t> codes,
              std::span<double> out);

// Raw float32 bytes over code bytes: 4D/M.
inline double compression_ratio(std::size_t dim, std::size_t num_blocks) {
  return 4.0 * static_cast<double>(dim) / static_cast<double>(num_blocks);
}

// Sum over blocks of ||v_i - c_{i, code_i}||^2.
double quantization_error(std::span<const float> v,
                          std::span<const std::uint8_t> codes,
                          const Codebook& cb);

}  // namespace repconc
