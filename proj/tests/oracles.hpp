// Copyright 2026 The lastiter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Test-only reference implementations, kept independent of the library's
// log-domain code paths: densities are evaluated directly in linear space and
// divergences by brute-force trapezoid quadrature.

#ifndef LASTITER_TESTS_ORACLES_HPP_
#define LASTITER_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "lastiter/mixture.hpp"

namespace lastiter_oracles {

// Direct-space mixture density sum_j w_j phi((y - s_j)/sd)/sd.
inline double mixture_pdf(const lastiter::ShiftMixture& mix, double y) {
  const double sd = mix.stddev();
  const double norm = 1.0 / (sd * std::sqrt(2.0 * M_PI));
  double acc = 0.0;
  for (const auto& atom : mix.atoms()) {
    const double z = (y - atom.shift) / sd;
    acc += std::exp(atom.log_weight) * norm * std::exp(-0.5 * z * z);
  }
  return acc;
}

inline double gaussian_pdf(double y, double sd) {
  const double z = y / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

// Brute-force H_{e^eps}(P, Q) (or the reversed direction) by trapezoid
// integration of max(p - e^eps q, 0) over [-20 sd, max_shift + 20 sd] with
// step step_factor * sd.
inline double hockey_stick_by_integration(const lastiter::ShiftMixture& mix,
                                          double epsilon, bool reversed,
                                          double step_factor = 1e-3) {
  const double sd = mix.stddev();
  const double lo = -20.0 * sd;
  const double hi = mix.max_shift() + 20.0 * sd;
  const double step = step_factor * sd;
  const auto n = static_cast<std::int64_t>(std::ceil((hi - lo) / step));
  const double scale = std::exp(epsilon);
  const auto integrand = [&](double y) {
    const double p = mixture_pdf(mix, y);
    const double q = gaussian_pdf(y, sd);
    const double diff = reversed ? q - scale * p : p - scale * q;
    return diff > 0.0 ? diff : 0.0;
  };
  double acc = 0.5 * (integrand(lo) + integrand(hi));
  for (std::int64_t i = 1; i < n; ++i) acc += integrand(lo + i * step);
  return acc * step;
}

// Hockey-stick divergence of N(1, 1/mu^2) vs N(0, 1/mu^2) at e^eps. The
// positive part starts exactly at the likelihood-ratio crossing
// y* = eps/mu^2 + 1/2, so Simpson integration over [y*, y* + 40 sd] sees a
// smooth integrand and reaches ~1e-12 accuracy.
inline double two_gaussian_hockey_by_integration(double mu, double eps) {
  const double sd = 1.0 / mu;
  const double y_star = eps * sd * sd + 0.5;
  const double length = 40.0 * sd + 1.0;
  const int n = 400000;  // even
  const double h = length / n;
  const double scale = std::exp(eps);
  const auto integrand = [&](double y) {
    const double z1 = (y - 1.0) / sd;
    const double z0 = y / sd;
    const double norm = 1.0 / (sd * std::sqrt(2.0 * M_PI));
    return norm * (std::exp(-0.5 * z1 * z1) - scale * std::exp(-0.5 * z0 * z0));
  };
  double acc = integrand(y_star) + integrand(y_star + length);
  for (int i = 1; i < n; ++i) {
    acc += integrand(y_star + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return std::max(0.0, acc * h / 3.0);
}

// High-precision ln Pr[N(0,1) >= z] for z > 0 via the Laplace continued
// fraction in extended precision; independent of the library's erfc and
// asymptotic-series branches.
inline double log_gaussian_sf_reference(double z) {
  long double cf = 0.0L;
  for (int k = 60; k >= 1; --k) {
    cf = static_cast<long double>(k) / (static_cast<long double>(z) + cf);
  }
  const long double tail = 1.0L / (static_cast<long double>(z) + cf);
  const long double log_phi =
      -0.5L * static_cast<long double>(z) * z -
      0.91893853320467274178032973640562L;
  return static_cast<double>(log_phi + std::log(tail));
}

// Binomial CDF by direct summation in extended precision (small n), used to
// cross-check the Clopper-Pearson bounds against their defining equation.
inline double binomial_cdf_reference(std::int64_t n, std::int64_t k, double p) {
  long double acc = 0.0L;
  long double coeff = 1.0L;  // C(n, i), updated incrementally
  for (std::int64_t i = 0; i <= k; ++i) {
    if (i > 0) coeff = coeff * (n - i + 1) / i;
    acc += coeff * std::pow(static_cast<long double>(p), i) *
           std::pow(1.0L - static_cast<long double>(p), n - i);
  }
  return static_cast<double>(acc);
}

}  // namespace lastiter_oracles

#endif  // LASTITER_TESTS_ORACLES_HPP_
