// Copyright 2026 The p2r Authors
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

// This translation unit is the only one compiled with -mavx2 (on x86-64).
// Everything here mirrors the scalar reference kernels operation for
// operation; see kernels.hpp for the bit-identity contract. In particular
// there are no fused multiply-adds: _mm256_mul_* followed by _mm256_add_*
// rounds exactly like the scalar multiply-then-add.

#include "p2r/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace p2r::kernels {

namespace {

void sub_f32_avx2(float* dst, const float* a, const float* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 va = _mm256_loadu_ps(a + i);
    __m256 vb = _mm256_loadu_ps(b + i);
    _mm256_storeu_ps(dst + i, _mm256_sub_ps(va, vb));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void add_scaled_f32_avx2(float* dst, const float* base, const float* v,
                         float c, std::size_t n) {
  __m256 vc = _mm256_set1_ps(c);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vb = _mm256_loadu_ps(base + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    __m256 scaled = _mm256_mul_ps(vc, vv);
    _mm256_storeu_ps(dst + i, _mm256_add_ps(vb, scaled));
  }
  for (; i < n; ++i) {
    float scaled = c * v[i];
    dst[i] = base[i] + scaled;
  }
}

void scale_f32_avx2(float* dst, const float* v, float c, std::size_t n) {
  __m256 vc = _mm256_set1_ps(c);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vv = _mm256_loadu_ps(v + i);
    _mm256_storeu_ps(dst + i, _mm256_mul_ps(vc, vv));
  }
  for (; i < n; ++i) dst[i] = c * v[i];
}

void accum_f64_avx2(double* acc, const float* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(acc + i);
    __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(va, vx));
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void add_f64_avx2(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(acc + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(va, vx));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void axpy_f64_avx2(double* y, const double* x, double c, std::size_t n) {
  __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d scaled = _mm256_mul_pd(vc, vx);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, scaled));
  }
  for (; i < n; ++i) {
    double scaled = c * x[i];
    y[i] += scaled;
  }
}

void div_to_f32_avx2(float* dst, const double* acc, double divisor,
                     std::size_t n) {
  __m256d vd = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(acc + i);
    _mm_storeu_ps(dst + i, _mm256_cvtpd_ps(_mm256_div_pd(va, vd)));
  }
  for (; i < n; ++i) dst[i] = static_cast<float>(acc[i] / divisor);
}

void div_f64_avx2(double* dst, const double* acc, double divisor,
                  std::size_t n) {
  __m256d vd = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(acc + i);
    _mm256_storeu_pd(dst + i, _mm256_div_pd(va, vd));
  }
  for (; i < n; ++i) dst[i] = acc[i] / divisor;
}

// Reduction tails reuse the vector accumulator's lanes: after the main loop
// i is a multiple of 4, so element i + j belongs to lane j, the same slot it
// would land in scalar code.

double dot_f32_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
    __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) {
    double prod = static_cast<double>(a[i]) * static_cast<double>(b[i]);
    lane[i & 3] += prod;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double dot_f64_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(a + i);
    __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) {
    double prod = a[i] * b[i];
    lane[i & 3] += prod;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double sqdist_f64_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    lane[i & 3] += d * d;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

const KernelTable kAvx2Table = {
    "avx2",          sub_f32_avx2, add_scaled_f32_avx2,
    scale_f32_avx2,  accum_f64_avx2, add_f64_avx2,
    axpy_f64_avx2,   div_to_f32_avx2, div_f64_avx2,
    dot_f32_avx2,    dot_f64_avx2, sqdist_f64_avx2,
};

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable* table =
      __builtin_cpu_supports("avx2") ? &kAvx2Table : nullptr;
  return table;
}

}  // namespace p2r::kernels

#else  // !defined(__AVX2__)

namespace p2r::kernels {

const KernelTable* avx2_kernels() { return nullptr; }

}  // namespace p2r::kernels

#endif
