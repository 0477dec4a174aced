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

namespace mrlda::simd::scalar {

double product_normalize(const double* a, const double* b, double* out, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a[i] * b[i];
    total += out[i];
  }
  if (total > 0.0) {
    const double inv = 1.0 / total;
    for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
  }
  return total;
}

void axpy(double w, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += w * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += x[i] * y[i];
  return total;
}

double sum(const double* x, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += x[i];
  return total;
}

double max_relative_change(const double* prev, const double* next, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max(worst, std::fabs(next[i] - prev[i]) / std::fabs(prev[i]));
  }
  return worst;
}

}  // namespace mrlda::simd::scalar
