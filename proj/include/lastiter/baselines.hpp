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
// Two comparison analyses:
//  - full-batch gradient descent via the Gaussian-DP equivalence, after the
//    (q=1, eta*q, sigma/q) rescaling;
//  - a composition-based accountant for subsampled Gaussian steps built on
//    Renyi divergences. This is an upper bound on the tight composition
//    (which an FFT-based privacy-loss-distribution accountant would give);
//    every consumer labels it as such.

#ifndef LASTITER_BASELINES_HPP_
#define LASTITER_BASELINES_HPP_

#include <span>
#include <vector>

#include "lastiter/mixture.hpp"

namespace lastiter {

// Keeps expected step size and total noise variance fixed while moving to
// q = 1: (T, q, eta, sigma) -> (T, 1, eta*q, sigma/q). Undefined at q = 0.
SgdParams fullbatch_rescale(const SgdParams& params);

// Gaussian-DP parameter of full-batch noisy GD: mu = sqrt(T) / sigma.
double gdp_mu(const SgdParams& params);

// delta(eps) of the Gaussian mechanism with trade-off parameter mu:
//   delta = Phi(mu/2 - eps/mu) - e^eps Phi(-mu/2 - eps/mu).
double gaussian_mechanism_delta(double mu, double epsilon);

// Inverse of the above in eps, by bisection with a doubling bracket.
double gaussian_mechanism_epsilon(double mu, double delta,
                                  double tol = kEpsilonTol);

// Renyi divergence of one subsampled Gaussian step at the given order > 1.
// Integer orders use the exact finite binomial sum; fractional orders the
// convergent two-sided series with erfc terms.
double subsampled_gaussian_rdp(double q, double sigma, double order);

// Order grid used when the caller does not supply one: {1.25, 1.5, 1.75},
// 2..64 in steps of 0.25, then {128, 256, 512}.
const std::vector<double>& default_renyi_orders();

// Composition-based epsilon upper bound: per-step Renyi divergence times T,
// converted to (eps, delta) and minimized over orders. q = 0 gives 0; q = 1
// delegates to the exact Gaussian mechanism.
double standard_epsilon(const SgdParams& params, double delta,
                        std::span<const double> orders = {});

// Solves for the noise multiplier giving the target composition-based
// epsilon (for steps == 1: the exact single-step accountant) at the given
// delta. Throws BracketError when the target cannot be bracketed.
double sigma_for_standard_epsilon(std::int64_t steps, double q,
                                  double target_epsilon, double delta);

}  // namespace lastiter

#endif  // LASTITER_BASELINES_HPP_
