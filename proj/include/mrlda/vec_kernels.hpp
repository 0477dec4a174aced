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

// Dense inner-loop kernels for the per-document E-step. Each kernel has a
// scalar reference version and, on x86-64, an AVX2 version. The active
// variant is chosen once at startup from CPUID and can be overridden with
// the MRLDA_ISA environment variable ("scalar" or "avx2") or set_isa().
//
// The AVX2 variants reassociate sums, so they agree with the scalar ones
// to rounding, not bit-for-bit. Any two code paths that must agree exactly
// have to run under the same active ISA.

#ifndef MRLDA_VEC_KERNELS_HPP
#define MRLDA_VEC_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string_view>

namespace mrlda::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
/// Throws std::invalid_argument if the ISA is not supported on this CPU.
void set_isa(Isa isa);

// out[i] = a[i] * b[i] / sum_j a[j] * b[j]. Returns the sum before
// normalization. If the sum is zero, out holds the unnormalized products.
double product_normalize(std::span<const double> a, std::span<const double> b,
                         std::span<double> out);

// y[i] += w * x[i]
void axpy(double w, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

double sum(std::span<const double> x);

// max_i |next[i] - prev[i]| / |prev[i]|
double max_relative_change(std::span<const double> prev, std::span<const double> next);

// Direct access to each variant, for equivalence tests and benchmarks.
namespace scalar {
double product_normalize(const double* a, const double* b, double* out, std::size_t n);
void axpy(double w, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double max_relative_change(const double* prev, const double* next, std::size_t n);
}  // namespace scalar

namespace avx2 {
double product_normalize(const double* a, const double* b, double* out, std::size_t n);
void axpy(double w, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double max_relative_change(const double* prev, const double* next, std::size_t n);
}  // namespace avx2

}  // namespace mrlda::simd

#endif  // MRLDA_VEC_KERNELS_HPP
