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
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "mrlda/math_kernels.hpp"

using namespace mrlda;
using Wide = boost::multiprecision::cpp_bin_float_50;

namespace {

std::vector<double> log_uniform_points(int n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = std::exp(u(rng));
  return xs;
}

}  // namespace

TEST_CASE("digamma reference values") {
  CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
  CHECK(std::abs(digamma(2.0) - (digamma(1.0) + 1.0)) < 1e-15);
}

TEST_CASE("trigamma reference values") {
  CHECK(trigamma(1.0) == doctest::Approx(1.6449340668482264).epsilon(1e-12));
  CHECK(std::abs(trigamma(2.0) - (trigamma(1.0) - 1.0)) < 1e-14);
  CHECK(trigamma(10.0) == doctest::Approx(0.10516633568168575).epsilon(1e-14));
}

TEST_CASE("log_gamma reference values") {
  CHECK(log_gamma(1.0) == 0.0);
  CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-15));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5723649429247001).epsilon(1e-15));
}

TEST_CASE("kernels against a 50-digit oracle") {
  const auto xs = log_uniform_points(10000, 1e-3, 1e3, 11);
  double dig = 0, tri = 0, lg = 0;
  for (double x : xs) {
    const Wide w(x);
    const double od = static_cast<double>(boost::math::digamma(w));
    const double ot = static_cast<double>(boost::math::trigamma(w));
    const double ol = static_cast<double>(boost::math::lgamma(w));
    dig = std::max(dig, std::abs(digamma(x) - od));
    tri = std::max(tri, std::abs(trigamma(x) - ot) / std::max(1.0, std::abs(ot)));
    lg = std::max(lg, std::abs(log_gamma(x) - ol) / std::abs(ol));
  }
  CHECK(dig <= 1e-12);
  CHECK(tri <= 1e-10);
  CHECK(lg <= 1e-12);
}

TEST_CASE("log_gamma keeps relative accuracy next to its roots") {
  for (double root : {1.0, 2.0}) {
    for (int e = -15; e <= -1; ++e) {
      for (int sign : {-1, 1}) {
        const double x = root + sign * std::pow(10.0, e);
        const double oracle = static_cast<double>(boost::math::lgamma(Wide(x)));
        CHECK(std::abs(log_gamma(x) - oracle) <= 1e-12 * std::abs(oracle));
      }
    }
  }
}

TEST_CASE("recurrence identities") {
  for (double x : log_uniform_points(10000, 1e-3, 1e3, 5)) {
    CHECK(std::abs(digamma(x + 1) - digamma(x) - 1 / x) <= 1e-10);
    const double t = trigamma(x);
    CHECK(std::abs(trigamma(x + 1) - t + 1 / (x * x)) <= 1e-10 * std::max(1.0, t));
    CHECK(std::abs(log_gamma(x + 1) - log_gamma(x) - std::log(x)) <= 1e-10);
  }
}

TEST_CASE("digamma is the derivative of log_gamma") {
  const double h = 1e-5;
  for (double x = 0.1; x <= 100.0; x *= 1.37) {
    CHECK(std::abs(digamma(x) - (log_gamma(x + h) - log_gamma(x - h)) / (2 * h)) <= 1e-5);
  }
}

TEST_CASE("domain errors instead of NaN") {
  for (double bad : {0.0, -1.0, std::numeric_limits<double>::infinity(), std::nan("")}) {
    CHECK_THROWS_AS(digamma(bad), DomainError);
    CHECK_THROWS_AS(trigamma(bad), DomainError);
    CHECK_THROWS_AS(log_gamma(bad), DomainError);
  }
  CHECK_THROWS_AS(PositiveReal(0.0), DomainError);
  CHECK(PositiveReal(2.5).value() == 2.5);
  CHECK_THROWS_AS(dirichlet_log_expectation(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(phi_fn(std::vector<double>{1.0, -1.0}), DomainError);
}

TEST_CASE("dirichlet_log_expectation") {
  const auto e = dirichlet_log_expectation(std::vector<double>{1.0, 1.0});
  CHECK(e[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(e[1] == doctest::Approx(-1.0).epsilon(1e-14));
  const auto s = dirichlet_log_expectation(std::vector<double>{0.7, 0.7, 0.7});
  CHECK(s[0] == s[1]);
  CHECK(s[1] == s[2]);
  const auto f = dirichlet_log_expectation(std::vector<double>{2.0, 1.0});
  CHECK(f[0] == doctest::Approx(digamma(2) - digamma(3)));
  CHECK(f[1] == doctest::Approx(digamma(1) - digamma(3)));

  std::vector<double> mu{0.3, 2.0, 5.5, 1.1};
  auto base = dirichlet_log_expectation(mu);
  for (double v : base) CHECK(v < 0.0);
  std::vector<double> perm{mu[2], mu[0], mu[3], mu[1]};
  const auto p = dirichlet_log_expectation(perm);
  CHECK(p[0] == base[2]);
  CHECK(p[1] == base[0]);
  CHECK(p[2] == base[3]);
  CHECK(p[3] == base[1]);
}

TEST_CASE("phi_fn") {
  CHECK(std::abs(phi_fn(std::vector<double>{1.0, 1.0})) < 1e-15);
  CHECK(phi_fn(std::vector<double>{1.0, 1.0, 1.0, 1.0}) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  const Wide a(2), b(3), t(5);
  const Wide direct = boost::math::lgamma(t) - boost::math::lgamma(a) - boost::math::lgamma(b) +
                      (a - 1) * (boost::math::digamma(a) - boost::math::digamma(t)) +
                      (b - 1) * (boost::math::digamma(b) - boost::math::digamma(t));
  CHECK(phi_fn(std::vector<double>{2.0, 3.0}) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-13));
  CHECK(phi_fn(std::vector<double>{0.4, 3.0, 9.0}) == doctest::Approx(phi_fn(std::vector<double>{9.0, 0.4, 3.0})).epsilon(1e-14));
  CHECK(log_dirichlet_normalizer(std::vector<double>{1.0, 1.0, 1.0}) == doctest::Approx(std::log(2.0)));
}
