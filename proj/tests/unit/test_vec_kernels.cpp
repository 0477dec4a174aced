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


#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mrlda/vec_kernels.hpp"

using namespace mrlda::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("scalar kernels match definitions") {
  std::vector<double> a{1, 2, 3}, b{3, 2, 1}, out(3);
  CHECK(product_normalize(a, b, out) == doctest::Approx(10.0));
  CHECK(out[0] == doctest::Approx(0.3));
  CHECK(out[1] == doctest::Approx(0.4));
  std::vector<double> y{1, 1, 1};
  axpy(2.0, a, y);
  CHECK(y == std::vector<double>{3, 5, 7});
  CHECK(dot(a, b) == 10.0);
  CHECK(sum(a) == 6.0);
  CHECK(max_relative_change(std::vector<double>{1, 2}, std::vector<double>{1.5, 2}) == doctest::Approx(0.5));
  std::vector<double> zeros{0, 0}, z(2);
  CHECK(product_normalize(zeros, zeros, z) == 0.0);
}

TEST_CASE("avx2 variants agree with scalar") {
  if (!isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  std::mt19937_64 rng(3);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vector(n, rng, 0.01, 5.0);
    const auto b = random_vector(n, rng, 0.01, 5.0);
    std::vector<double> o1(n), o2(n);
    const double s1 = scalar::product_normalize(a.data(), b.data(), o1.data(), n);
    const double s2 = avx2::product_normalize(a.data(), b.data(), o2.data(), n);
    CHECK(close(s1, s2, 1e-14));
    for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i], 1e-14));

    auto y1 = b, y2 = b;
    scalar::axpy(1.7, a.data(), y1.data(), n);
    avx2::axpy(1.7, a.data(), y2.data(), n);
    CHECK(y1 == y2);

    CHECK(close(scalar::dot(a.data(), b.data(), n), avx2::dot(a.data(), b.data(), n), 1e-14));
    CHECK(close(scalar::sum(a.data(), n), avx2::sum(a.data(), n), 1e-14));
    CHECK(scalar::max_relative_change(a.data(), b.data(), n) == avx2::max_relative_change(a.data(), b.data(), n));
  }
}

TEST_CASE("dispatch can be forced") {
  const Isa original = active_isa();
  set_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  CHECK(isa_name(Isa::scalar) == "scalar");
  if (isa_supported(Isa::avx2)) {
    set_isa(Isa::avx2);
    CHECK(active_isa() == Isa::avx2);
  } else {
    CHECK_THROWS_AS(set_isa(Isa::avx2), std::invalid_argument);
  }
  set_isa(original);
}
