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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"
#include "repconc/kernels.hpp"

namespace repconc::kernels {
namespace {

const KernelSet kScalar{"scalar", &detail::dot_scalar, &detail::l2sqr_scalar,
                        &detail::adc_scan_scalar};

#if defined(REPCONC_HAVE_AVX2)
const KernelSet kAvx2{"avx2", &detail::dot_avx2, &detail::l2sqr_avx2,
                      &detail::adc_scan_avx2};
#endif

#if defined(REPCONC_HAVE_NEON)
const KernelSet kNeon{"neon", &detail::dot_neon, &detail::l2sqr_neon,
                      &detail::adc_scan_neon};
#endif

const KernelSet* select_default() {
  if (const char* forced = std::getenv("REPCONC_SIMD")) {
    const std::string_view name(forced);
    if (name == "scalar") return &kScalar;
    if (name == "avx2" && avx2_kernels() != nullptr) return avx2_kernels();
    if (name == "neon" && neon_kernels() != nullptr) return neon_kernels();
  }
  if (const KernelSet* k = avx2_kernels()) return k;
  if (const KernelSet* k = neon_kernels()) return k;
  return &kScalar;
}

std::atomic<const KernelSet*> g_override{nullptr};

}  // namespace

const KernelSet& scalar_kernels() { return kScalar; }

const KernelSet* avx2_kernels() {
#if defined(REPCONC_HAVE_AVX2)
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet* neon_kernels() {
#if defined(REPCONC_HAVE_NEON)
  return &kNeon;
#else
  return nullptr;
#endif
}

std::vector<const KernelSet*> available_kernels() {
  std::vector<const KernelSet*> out{&kScalar};
  if (const KernelSet* k = avx2_kernels()) out.push_back(k);
  if (const KernelSet* k = neon_kernels()) out.push_back(k);
  return out;
}

const KernelSet& active() {
  if (const KernelSet* k = g_override.load(std::memory_order_acquire)) {
    return *k;
  }
  static const KernelSet* chosen = select_default();
  return *chosen;
}

void set_active(const KernelSet* kernels) {
  g_override.store(kernels, std::memory_order_release);
}

}  // namespace repconc::kernels
