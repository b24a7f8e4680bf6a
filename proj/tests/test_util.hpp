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

// Small fixtures shared by the unit tests.

#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "repconc/numerics.hpp"
#include "repconc/pq.hpp"

namespace repconc::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (float& v : m.data()) v = static_cast<float>(rng.normal() * scale);
  return m;
}

inline MatrixD random_matrix_d(std::size_t rows, std::size_t cols, std::uint64_t seed,
                               double scale = 1.0) {
  Rng rng(seed);
  MatrixD m(rows, cols);
  for (double& v : m.data()) v = rng.normal() * scale;
  return m;
}

inline Codebook random_codebook(std::size_t dim, std::size_t m, std::size_t k,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> c(m * k * (dim / m));
  for (float& v : c) v = static_cast<float>(rng.normal());
  return Codebook(dim, m, k, std::move(c));
}

// Random orthonormal matrix from the SVD of a Gaussian matrix.
inline Matrix random_rotation(std::size_t dim, std::uint64_t seed) {
  const SvdResult s = svd_square(random_matrix_d(dim, dim, seed));
  return Matrix::cast_from(multiply(s.u, s.vt));
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("repconc_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace repconc::testing
