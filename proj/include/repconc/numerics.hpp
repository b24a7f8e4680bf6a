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

// Dense numeric carriers and the small amount of linear algebra the rest of
// the library needs: distances, inner products, a square SVD and a seeded,
// splittable random source.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "repconc/error.hpp"

namespace repconc {

// Row-major dense matrix. Storage is 32-bit for the float instantiation;
// training keeps its master copies in double.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " +
                           std::to_string(data_.size()) + " != " +
                           std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  template <typename U>
  static BasicMatrix cast_from(const BasicMatrix<U>& other) {
    BasicMatrix m(other.rows(), other.cols());
    auto src = other.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      m.data_[i] = static_cast<T>(src[i]);
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

// Distances and inner products. Float overloads go through the dispatched
// SIMD kernels; reductions always accumulate in double.
double squared_l2(std::span<const float> a, std::span<const float> b);
double squared_l2(std::span<const double> a, std::span<const double> b);
double inner_product(std::span<const float> a, std::span<const float> b);
double inner_product(std::span<const double> a, std::span<const double> b);

MatrixD multiply(const MatrixD& a, const MatrixD& b);
MatrixD transpose(const MatrixD& a);

// out = m * v
void matvec(const MatrixD& m, std::span<const double> v, std::span<double> out);
// out = m^T * v
void matvec_transposed(const MatrixD& m, std::span<const double> v,
                       std::span<double> out);

// max |(m m^T - I)_{ij}|
double orthonormality_error(const MatrixD& m);

struct SvdResult {
  MatrixD u;
  std::vector<double> singular_values;  // descending
  MatrixD vt;
};

// One-sided Jacobi SVD of a square matrix: m = u * diag(s) * vt.
SvdResult svd_square(const MatrixD& m);

struct SvdResultF {
  Matrix u;
  std::vector<float> singular_values;
  Matrix vt;
};
SvdResultF svd_square(const Matrix& m);

// SplitMix64 generator. The full state is one 64-bit word; split() derives
// an independent stream from (state, stream id) without advancing the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Rng split(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Worker cap used by parallel_for. 0 means hardware concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Each index must write disjoint output so the
// result does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace repconc
