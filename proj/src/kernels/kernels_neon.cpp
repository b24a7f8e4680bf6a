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

// AArch64 variants. Kept free of standard library headers so the file can be
// syntax-checked with a freestanding cross compiler.

#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace repconc::kernels::detail {

double dot_neon(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)),
                     vcvt_f64_f32(vget_low_f32(vb)));
    acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2sqr_neon(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    const float64x2_t dlo = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)),
                                      vcvt_f64_f32(vget_low_f32(vb)));
    const float64x2_t dhi =
        vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    acc0 = vfmaq_f64(acc0, dlo, dlo);
    acc1 = vfmaq_f64(acc1, dhi, dhi);
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += diff * diff;
  }
  return acc;
}

// Two documents per vector; per-lane block order matches the scalar kernel.
void adc_scan_neon(const double* table, std::size_t m, std::size_t k,
                   const std::uint8_t* codes, std::size_t n, double* out) {
  std::size_t d = 0;
  for (; d + 2 <= n; d += 2) {
    const std::uint8_t* c0 = codes + d * m;
    const std::uint8_t* c1 = c0 + m;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = table + i * k;
      acc = vaddq_f64(acc, vcombine_f64(vld1_f64(row + c0[i]),
                                        vld1_f64(row + c1[i])));
    }
    vst1q_f64(out + d, acc);
  }
  if (d < n) adc_scan_scalar(table, m, k, codes + d * m, n - d, out + d);
}

}  // namespace repconc::kernels::detail
