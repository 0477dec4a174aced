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

#include "mrlda/math_kernels.hpp"

#include <cmath>
#include <string>

namespace mrlda {

namespace {

void check_argument(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Below this the asymptotic series is not used; arguments are shifted up
// through the recurrence first.
constexpr double kAsymptoticThreshold = 6.0;

}  // namespace

PositiveReal::PositiveReal(double value) : value_(value) {
  check_argument(value, "PositiveReal");
}

double digamma(double x) {
  check_argument(x, "digamma");
  double shift = 0.0;
  while (x < kAsymptoticThreshold) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / x;
  const double r2 = r * r;
  // Bernoulli terms through x^-14.
  const double series =
      r2 * (1.0 / 12 -
            r2 * (1.0 / 120 -
                  r2 * (1.0 / 252 -
                        r2 * (1.0 / 240 -
                              r2 * (1.0 / 132 - r2 * (691.0 / 32760 - r2 * (1.0 / 12)))))));
  return shift + std::log(x) - 0.5 * r - series;
}

double trigamma(double x) {
  check_argument(x, "trigamma");
  double shift = 0.0;
  while (x < kAsymptoticThreshold) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r * (1.0 +
           r * (0.5 +
                r * (1.0 / 6 -
                     r2 * (1.0 / 30 -
                           r2 * (1.0 / 42 -
                                 r2 * (1.0 / 30 -
                                       r2 * (5.0 / 66 - r2 * (691.0 / 2730 - r2 * (7.0 / 6)))))))));
  return shift + series;
}

double log_gamma(double x) {
  check_argument(x, "log_gamma");
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

void check_dirichlet_params(std::span<const double> mu, std::size_t min_size,
                            const char* what) {
  if (mu.size() < min_size) {
    throw DomainError(std::string(what) + ": parameter vector needs at least " +
                      std::to_string(min_size) + " entries, got " + std::to_string(mu.size()));
  }
  for (double m : mu) check_argument(m, what);
}

std::vector<double> dirichlet_log_expectation(std::span<const double> mu) {
  check_dirichlet_params(mu, 1, "dirichlet_log_expectation");
  double total = 0.0;
  for (double m : mu) total += m;
  const double psi_total = digamma(total);
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = digamma(mu[i]) - psi_total;
  return out;
}

double log_dirichlet_normalizer(std::span<const double> mu) {
  check_dirichlet_params(mu, 1, "log_dirichlet_normalizer");
  double total = 0.0;
  double sum_log_gamma = 0.0;
  for (double m : mu) {
    total += m;
    sum_log_gamma += log_gamma(m);
  }
  return log_gamma(total) - sum_log_gamma;
}

double phi_fn(std::span<const double> mu) {
  check_dirichlet_params(mu, 1, "phi_fn");
  double total = 0.0;
  for (double m : mu) total += m;
  const double psi_total = digamma(total);
  double value = log_gamma(total);
  for (double m : mu) {
    value -= log_gamma(m);
    value += (m - 1.0) * (digamma(m) - psi_total);
  }
  return value;
}

}  // namespace mrlda
