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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace repconc::kernels::detail {
namespace {

inline double horizontal_sum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc_lo = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                             _mm256_cvtps_pd(_mm256_castps256_ps128(vb)),
                             acc_lo);
    acc_hi = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                             _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)),
                             acc_hi);
  }
  double acc = horizontal_sum(_mm256_add_pd(acc_lo, acc_hi));
  for (; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2sqr_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256d dlo =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                      _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
    const __m256d dhi =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                      _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
    acc_lo = _mm256_fmadd_pd(dlo, dlo, acc_lo);
    acc_hi = _mm256_fmadd_pd(dhi, dhi, acc_hi);
  }
  double acc = horizontal_sum(_mm256_add_pd(acc_lo, acc_hi));
  for (; i < n; ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += diff * diff;
  }
  return acc;
}

// Four documents per lane group. Each lane adds its blocks in the same order
// as the scalar kernel, so results are bit-identical to it.
void adc_scan_avx2(const double* table, std::size_t m, std::size_t k,
                   const std::uint8_t* codes, std::size_t n, double* out) {
  std::size_t d = 0;
  for (; d + 4 <= n; d += 4) {
    const std::uint8_t* c0 = codes + d * m;
    const std::uint8_t* c1 = c0 + m;
    const std::uint8_t* c2 = c1 + m;
    const std::uint8_t* c3 = c2 + m;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < m; ++i) {
      const int base = static_cast<int>(i * k);
      const __m128i idx = _mm_setr_epi32(base + c0[i], base + c1[i],
                                         base + c2[i], base + c3[i]);
      acc = _mm256_add_pd(acc, _mm256_i32gather_pd(table, idx, 8));
    }
    _mm256_storeu_pd(out + d, acc);
  }
  if (d < n) adc_scan_scalar(table, m, k, codes + d * m, n - d, out + d);
}

}  // namespace repconc::kernels::detail
