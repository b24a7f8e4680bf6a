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

#include "repconc/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <thread>

#include "repconc/kernels.hpp"

namespace repconc {
namespace {

template <typename A, typename B>
void require_same_length(const A& a, const B& b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length mismatch " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::atomic<std::size_t> g_max_threads{0};

}  // namespace

double squared_l2(std::span<const float> a, std::span<const float> b) {
  require_same_length(a, b, "squared_l2");
  return kernels::active().l2sqr(a.data(), b.data(), a.size());
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "squared_l2");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

double inner_product(std::span<const float> a, std::span<const float> b) {
  require_same_length(a, b, "inner_product");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

double inner_product(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "inner_product");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

MatrixD multiply(const MatrixD& a, const MatrixD& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("multiply: inner dimensions " +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  }
  MatrixD out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

MatrixD transpose(const MatrixD& a) {
  MatrixD out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

void matvec(const MatrixD& m, std::span<const double> v, std::span<double> out) {
  if (v.size() != m.cols() || out.size() != m.rows()) {
    throw DimensionError("matvec: shape mismatch");
  }
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = inner_product(m.row(i), v);
}

void matvec_transposed(const MatrixD& m, std::span<const double> v,
                       std::span<double> out) {
  if (v.size() != m.rows() || out.size() != m.cols()) {
    throw DimensionError("matvec_transposed: shape mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = v[i];
    auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vi * row[j];
  }
}

double orthonormality_error(const MatrixD& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.rows(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(inner_product(m.row(i), m.row(j)) - target));
    }
  }
  return worst;
}

// Hestenes one-sided Jacobi. Columns of U are kept as rows of `ut` so the
// pairwise rotations walk contiguous memory.
SvdResult svd_square(const MatrixD& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("svd_square: non-square input " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  if (!m.all_finite()) throw InputError("svd_square: non-finite input");
  const std::size_t n = m.rows();
  MatrixD ut = transpose(m);
  MatrixD vt = MatrixD::identity(n);

  constexpr double kTol = 1e-15;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto up = ut.row(p);
        auto uq = ut.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          alpha += up[i] * up[i];
          beta += uq[i] * uq[i];
          gamma += up[i] * uq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double a = up[i], b = uq[i];
          up[i] = c * a - s * b;
          uq[i] = s * a + c * b;
        }
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double a = vp[i], b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    sigma[j] = std::sqrt(inner_product(ut.row(j), ut.row(j)));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  SvdResult out{MatrixD(n, n), std::vector<double>(n), MatrixD(n, n)};
  const double scale = sigma.empty() ? 0.0 : sigma[order[0]];
  const double zero_cut = std::max(scale, 1.0) * 1e-12;
  // Left vectors for (numerically) zero singular values are completed to an
  // orthonormal basis by Gram-Schmidt over the unit vectors.
  MatrixD u_cols(n, n);
  std::vector<bool> filled(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    out.singular_values[r] = sigma[j];
    auto dst = vt.row(j);
    std::copy(dst.begin(), dst.end(), out.vt.row(r).begin());
    if (sigma[j] > zero_cut) {
      auto src = ut.row(j);
      auto col = u_cols.row(r);
      for (std::size_t i = 0; i < n; ++i) col[i] = src[i] / sigma[j];
      filled[r] = true;
    }
  }
  std::size_t next_axis = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (filled[r]) continue;
    out.singular_values[r] = 0.0;
    auto col = u_cols.row(r);
    while (next_axis < n) {
      std::fill(col.begin(), col.end(), 0.0);
      col[next_axis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < n; ++o) {
          if (!filled[o]) continue;
          const double proj = inner_product(u_cols.row(o), col);
          auto other = u_cols.row(o);
          for (std::size_t i = 0; i < n; ++i) col[i] -= proj * other[i];
        }
      }
      const double norm = std::sqrt(inner_product(col, col));
      if (norm > 1e-6) {
        for (double& v : col) v /= norm;
        filled[r] = true;
        break;
      }
    }
  }
  out.u = transpose(u_cols);
  return out;
}

SvdResultF svd_square(const Matrix& m) {
  SvdResult r = svd_square(MatrixD::cast_from(m));
  SvdResultF out{Matrix::cast_from(r.u), {}, Matrix::cast_from(r.vt)};
  out.singular_values.assign(r.singular_values.begin(), r.singular_values.end());
  return out;
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ConfigError("Rng::uniform_index: empty range");
  // Lemire's nearly-divisionless bounded draw.
  unsigned __int128 product =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
  auto low = static_cast<std::uint64_t>(product);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(next_u64()) *
                static_cast<unsigned __int128>(n);
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * 3.14159265358979323846 * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix64(state_ ^ mix64(stream + kGolden)));
}

void set_max_threads(std::size_t n) { g_max_threads.store(n); }

std::size_t max_threads() {
  const std::size_t cap = g_max_threads.load();
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(max_threads(), n);
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace repconc
