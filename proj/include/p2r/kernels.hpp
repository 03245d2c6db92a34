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

#ifndef P2R_KERNELS_HPP_
#define P2R_KERNELS_HPP_

#include <cstddef>

// Low-level array kernels behind all numeric loops in the toolkit.
//
// Two implementations exist: a scalar reference and an AVX2 variant picked
// at runtime. They are bit-identical by construction:
//   * no FMA anywhere; multiply and add are separate, individually rounded
//     operations in both variants,
//   * reductions accumulate into four f64 lanes by element index mod 4 and
//     combine as (lane0 + lane2) + (lane1 + lane3), the same schedule in
//     scalar and SIMD code,
//   * f32 inputs are widened to f64 before multiplication, so products are
//     exact and insensitive to the order of widening.
//
// Pointer arguments must be non-overlapping, except that a destination may
// equal one of the sources exactly (same base address); partial overlap is
// undefined. n == 0 is valid everywhere.
namespace p2r::kernels {

struct KernelTable {
  const char* name;

  // dst[i] = a[i] - b[i]
  void (*sub_f32)(float* dst, const float* a, const float* b, std::size_t n);
  // dst[i] = base[i] + c * v[i]
  void (*add_scaled_f32)(float* dst, const float* base, const float* v,
                         float c, std::size_t n);
  // dst[i] = c * v[i]
  void (*scale_f32)(float* dst, const float* v, float c, std::size_t n);
  // acc[i] += (f64)x[i]
  void (*accum_f64)(double* acc, const float* x, std::size_t n);
  // acc[i] += x[i]
  void (*add_f64)(double* acc, const double* x, std::size_t n);
  // y[i] += c * x[i]
  void (*axpy_f64)(double* y, const double* x, double c, std::size_t n);
  // dst[i] = (f32)(acc[i] / divisor)
  void (*div_to_f32)(float* dst, const double* acc, double divisor,
                     std::size_t n);
  // dst[i] = acc[i] / divisor
  void (*div_f64)(double* dst, const double* acc, double divisor,
                  std::size_t n);
  // sum_i (f64)a[i] * (f64)b[i], four-lane schedule
  double (*dot_f32)(const float* a, const float* b, std::size_t n);
  // sum_i a[i] * b[i], four-lane schedule
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i] - b[i])^2, four-lane schedule
  double (*sqdist_f64)(const double* a, const double* b, std::size_t n);
};

// Portable reference implementation. Always available.
const KernelTable& scalar_kernels();

// AVX2 implementation, or nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// Table used by the rest of the library: AVX2 when available, otherwise
// scalar. The environment variable P2R_KERNELS (values "scalar" or "avx2")
// forces a choice; requesting an unavailable table is an error. The
// selection is made once and cached.
const KernelTable& active_kernels();

}  // namespace p2r::kernels

#endif  // P2R_KERNELS_HPP_
