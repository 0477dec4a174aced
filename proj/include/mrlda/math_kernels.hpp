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

#ifndef MRLDA_MATH_KERNELS_HPP
#define MRLDA_MATH_KERNELS_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrlda {

/// Raised when a special function receives an argument outside its domain.
/// Kernels never return NaN for bad input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Strictly positive, finite real. Construction validates.
class PositiveReal {
 public:
  explicit PositiveReal(double value);
  double value() const { return value_; }
  operator double() const { return value_; }

 private:
  double value_;
};

// Special functions. All throw DomainError for x <= 0 or non-finite x.
double digamma(double x);
double trigamma(double x);
double log_gamma(double x);

/// e_i = digamma(mu_i) - digamma(sum_j mu_j).
std::vector<double> dirichlet_log_expectation(std::span<const double> mu);

/// log Gamma(sum mu) - sum log Gamma(mu_i): the log normalizer of Dir(mu).
double log_dirichlet_normalizer(std::span<const double> mu);

/// Negative entropy of Dir(mu):
///   log Gamma(sum mu) - sum log Gamma(mu_i)
///     + sum (mu_i - 1) (digamma(mu_i) - digamma(sum mu)).
double phi_fn(std::span<const double> mu);

/// Throws DomainError unless every entry is positive and finite and the
/// vector has at least `min_size` entries.
void check_dirichlet_params(std::span<const double> mu, std::size_t min_size,
                            const char* what);

}  // namespace mrlda

#endif  // MRLDA_MATH_KERNELS_HPP
