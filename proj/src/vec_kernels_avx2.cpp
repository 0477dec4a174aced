// Copyright 2026 The mrlda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include "mrlda/vec_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define MRLDA_HAVE_AVX2_PATH 1
#define MRLDA_AVX2 __attribute__((target("avx2")))
#else
#define MRLDA_HAVE_AVX2_PATH 0
#endif

namespace mrlda::simd::avx2 {

#if MRLDA_HAVE_AVX2_PATH

namespace {

MRLDA_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

MRLDA_AVX2 inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, shuf));
}

}  // namespace

MRLDA_AVX2 double product_normalize(const double* a, const double* b, double* out,
                                    std::size_t n) {
  const std::size_t whole = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < whole; i += 4) {
    __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, p);
    acc = _mm256_add_pd(acc, p);
  }
  double total = hsum(acc);
  for (std::size_t i = whole; i < n; ++i) {
    out[i] = a[i] * b[i];
    total += out[i];
  }
  if (total > 0.0) {
    const double inv = 1.0 / total;
    const __m256d vinv = _mm256_set1_pd(inv);
    for (std::size_t i = 0; i < whole; i += 4) {
      _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(out + i), vinv));
    }
    for (std::size_t i = whole; i < n; ++i) out[i] *= inv;
  }
  return total;
}

MRLDA_AVX2 void axpy(double w, const double* x, double* y, std::size_t n) {
  const std::size_t whole = n - n % 4;
  const __m256d vw = _mm256_set1_pd(w);
  for (std::size_t i = 0; i < whole; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(x + i), vw);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (std::size_t i = whole; i < n; ++i) y[i] += w * x[i];
}

MRLDA_AVX2 double dot(const double* x, const double* y, std::size_t n) {
  const std::size_t whole = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < whole; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double total = hsum(acc);
  for (std::size_t i = whole; i < n; ++i) total += x[i] * y[i];
  return total;
}

MRLDA_AVX2 double sum(const double* x, std::size_t n) {
  const std::size_t whole = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < whole; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (std::size_t i = whole; i < n; ++i) total += x[i];
  return total;
}

MRLDA_AVX2 double max_relative_change(const double* prev, const double* next, std::size_t n) {
  const std::size_t whole = n - n % 4;
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d worst = _mm256_setzero_pd();
  for (std::size_t i = 0; i < whole; i += 4) {
    __m256d p = _mm256_loadu_pd(prev + i);
    __m256d d = _mm256_and_pd(_mm256_sub_pd(_mm256_loadu_pd(next + i), p), abs_mask);
    worst = _mm256_max_pd(worst, _mm256_div_pd(d, _mm256_and_pd(p, abs_mask)));
  }
  double result = hmax(worst);
  for (std::size_t i = whole; i < n; ++i) {
    result = std::max(result, std::fabs(next[i] - prev[i]) / std::fabs(prev[i]));
  }
  return result;
}

#else  // no AVX2 path on this architecture; isa_supported(avx2) is false

double product_normalize(const double* a, const double* b, double* out, std::size_t n) {
  return scalar::product_normalize(a, b, out, n);
}
void axpy(double w, const double* x, double* y, std::size_t n) { scalar::axpy(w, x, y, n); }
double dot(const double* x, const double* y, std::size_t n) { return scalar::dot(x, y, n); }
double sum(const double* x, std::size_t n) { return scalar::sum(x, n); }
double max_relative_change(const double* prev, const double* next, std::size_t n) {
  return scalar::max_relative_change(prev, next, n);
}

#endif

}  // namespace mrlda::simd::avx2
