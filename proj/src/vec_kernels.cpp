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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mrlda/vec_kernels.hpp"

namespace mrlda::simd {

namespace {

struct KernelTable {
  double (*product_normalize)(const double*, const double*, double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*max_relative_change)(const double*, const double*, std::size_t);
};

constexpr KernelTable kScalar{scalar::product_normalize, scalar::axpy, scalar::dot,
                              scalar::sum, scalar::max_relative_change};
constexpr KernelTable kAvx2{avx2::product_normalize, avx2::axpy, avx2::dot, avx2::sum,
                            avx2::max_relative_change};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect_isa() {
  if (const char* env = std::getenv("MRLDA_ISA")) {
    std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect_isa()};
  return isa;
}

const KernelTable& table() { return current().load(std::memory_order_relaxed) == Isa::avx2 ? kAvx2 : kScalar; }

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("vector kernel: length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
  current().store(isa);
}

double product_normalize(std::span<const double> a, std::span<const double> b,
                         std::span<double> out) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), out.size());
  return table().product_normalize(a.data(), b.data(), out.data(), a.size());
}

void axpy(double w, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size());
  table().axpy(w, x.data(), y.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size());
  return table().dot(x.data(), y.data(), x.size());
}

double sum(std::span<const double> x) { return table().sum(x.data(), x.size()); }

double max_relative_change(std::span<const double> prev, std::span<const double> next) {
  check_sizes(prev.size(), next.size());
  return table().max_relative_change(prev.data(), next.data(), prev.size());
}

}  // namespace mrlda::simd
