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

#pragma once

#include <cstddef>
#include <cstdint>

namespace repconc::kernels::detail {

double dot_scalar(const float* a, const float* b, std::size_t n);
double l2sqr_scalar(const float* a, const float* b, std::size_t n);
void adc_scan_scalar(const double* table, std::size_t m, std::size_t k,
                     const std::uint8_t* codes, std::size_t n, double* out);

#if defined(REPCONC_HAVE_AVX2)
double dot_avx2(const float* a, const float* b, std::size_t n);
double l2sqr_avx2(const float* a, const float* b, std::size_t n);
void adc_scan_avx2(const double* table, std::size_t m, std::size_t k,
                   const std::uint8_t* codes, std::size_t n, double* out);
#endif

#if defined(REPCONC_HAVE_NEON)
double dot_neon(const float* a, const float* b, std::size_t n);
double l2sqr_neon(const float* a, const float* b, std::size_t n);
void adc_scan_neon(const double* table, std::size_t m, std::size_t k,
                   const std::uint8_t* codes, std::size_t n, double* out);
#endif

}  // namespace repconc::kernels::detail
