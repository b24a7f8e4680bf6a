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

// Inner-loop kernels with a scalar reference and SIMD variants. The active
// set is picked once at first use from CPU features; REPCONC_SIMD=scalar in
// the environment forces the reference path.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace repconc::kernels {

using DotFn = double (*)(const float* a, const float* b, std::size_t n);
using L2Fn = double (*)(const float* a, const float* b, std::size_t n);
// out[d] = sum_{i < m} table[i * k + codes[d * m + i]], summed in block order.
using AdcScanFn = void (*)(const double* table, std::size_t m, std::size_t k,
                           const std::uint8_t* codes, std::size_t n,
                           double* out);

struct KernelSet {
  std::string_view name;
  DotFn dot;
  L2Fn l2sqr;
  AdcScanFn adc_scan;
};

const KernelSet& scalar_kernels();
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelSet* avx2_kernels();
const KernelSet* neon_kernels();

// All variants usable on this machine, scalar first.
std::vector<const KernelSet*> available_kernels();

const KernelSet& active();
// Override the dispatch choice (tests, benchmarks). Passing nullptr restores
// automatic selection.
void set_active(const KernelSet* kernels);

}  // namespace repconc::kernels
