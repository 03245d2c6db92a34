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

#include "p2r/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "p2r/common.hpp"

namespace p2r::kernels {

namespace {

void sub_f32_scalar(float* dst, const float* a, const float* b,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void add_scaled_f32_scalar(float* dst, const float* base, const float* v,
                           float c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    float scaled = c * v[i];
    dst[i] = base[i] + scaled;
  }
}

void scale_f32_scalar(float* dst, const float* v, float c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = c * v[i];
}

void accum_f64_scalar(double* acc, const float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void add_f64_scalar(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void axpy_f64_scalar(double* y, const double* x, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double scaled = c * x[i];
    y[i] += scaled;
  }
}

void div_to_f32_scalar(float* dst, const double* acc, double divisor,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = static_cast<float>(acc[i] / divisor);
  }
}

void div_f64_scalar(double* dst, const double* acc, double divisor,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = acc[i] / divisor;
}

double dot_f32_scalar(const float* a, const float* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    double prod = static_cast<double>(a[i]) * static_cast<double>(b[i]);
    lane[i & 3] += prod;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double dot_f64_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    double prod = a[i] * b[i];
    lane[i & 3] += prod;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double sqdist_f64_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    lane[i & 3] += d * d;
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

const KernelTable kScalarTable = {
    "scalar",          sub_f32_scalar, add_scaled_f32_scalar,
    scale_f32_scalar,  accum_f64_scalar, add_f64_scalar,
    axpy_f64_scalar,   div_to_f32_scalar, div_f64_scalar,
    dot_f32_scalar,    dot_f64_scalar, sqdist_f64_scalar,
};

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

const KernelTable& active_kernels() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("P2R_KERNELS");
    if (env != nullptr && std::strlen(env) > 0) {
      if (std::strcmp(env, "scalar") == 0) return &kScalarTable;
      if (std::strcmp(env, "avx2") == 0) {
        const KernelTable* t = avx2_kernels();
        if (t == nullptr) {
          throw_usage("P2R_KERNELS=avx2 requested but AVX2 is unavailable");
        }
        return t;
      }
      throw_usage(std::string("unknown P2R_KERNELS value: ") + env);
    }
    const KernelTable* t = avx2_kernels();
    return t != nullptr ? t : &kScalarTable;
  }();
  return *chosen;
}

}  // namespace p2r::kernels
