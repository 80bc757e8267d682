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

#include "lastiter/numerics.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace lastiter {
namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;  // ln sqrt(2*pi)
constexpr double kSqrt1_2 = 0.707106781186547524400844362105;    // 1/sqrt(2)

// ln Gamma(n+1) = ln(n!). Exact cumulative table in extended precision for
// small n, long-double Stirling beyond; both are accurate to ~1e-17 relative,
// which keeps binomial masses good to the last couple of bits.
constexpr int kLogFactorialTableSize = 4096;

long double log_factorial(std::int64_t n) {
  static const std::vector<long double>* table = [] {
    auto* t = new std::vector<long double>(kLogFactorialTableSize);
    (*t)[0] = 0.0L;
    for (int i = 1; i < kLogFactorialTableSize; ++i) {
      (*t)[i] = (*t)[i - 1] + std::log(static_cast<long double>(i));
    }
    return t;
  }();
  if (n < kLogFactorialTableSize) return (*table)[n];
  const long double z = static_cast<long double>(n) + 1.0L;
  const long double zi = 1.0L / z;
  const long double zi2 = zi * zi;
  // Stirling series; at z > 4096 the omitted term is below 1e-30 relative.
  return (z - 0.5L) * std::log(z) - z + 0.91893853320467274178032973640562L +
         zi * (1.0L / 12.0L + zi2 * (-1.0L / 360.0L + zi2 * (1.0L / 1260.0L)));
}

// Asymptotic expansion of the scaled Gaussian tail:
//   Pr[N(0,1) >= z] = phi(z)/z * sum_k (-1)^k (2k-1)!!/z^(2k).
// The series is truncated at its smallest term; for z >= 8 that term is below
// 1e-13 relative.
double log_sf_asymptotic(double z) {
  const double inv_z2 = 1.0 / (z * z);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 40; ++k) {
    const double next = term * -(2.0 * k - 1.0) * inv_z2;
    if (std::fabs(next) >= std::fabs(term)) break;  // divergence point
    term = next;
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return -0.5 * z * z - std::log(z) - kLnSqrt2Pi + std::log(sum);
}

// Continued fraction for the incomplete beta (Lentz's algorithm).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double beta_quantile(double p, double a, double b) {
  // I_x(a,b) is increasing in x; bisect to 1e-10.
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60 && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

LogProb log_binom_pmf(std::int64_t trials, std::int64_t k, double q) {
  if (trials < 1) throw std::domain_error("log_binom_pmf: trials must be >= 1");
  if (k < 0 || k > trials) {
    throw std::domain_error("log_binom_pmf: k outside [0, trials]");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::domain_error("log_binom_pmf: q outside [0, 1]");
  }
  if (q == 0.0) return LogProb(k == 0 ? 0.0 : kNegInf);
  if (q == 1.0) return LogProb(k == trials ? 0.0 : kNegInf);
  long double v = log_factorial(trials) - log_factorial(k) -
                  log_factorial(trials - k);
  if (k > 0) v += static_cast<long double>(k) * std::log(static_cast<long double>(q));
  if (k < trials) {
    v += static_cast<long double>(trials - k) *
         std::log1p(-static_cast<long double>(q));
  }
  return LogProb(static_cast<double>(v));
}

LogProb log_gaussian_sf(double z) {
  if (std::isnan(z)) throw std::domain_error("log_gaussian_sf: NaN");
  if (z < 0.0) {
    // sf(z) = 1 - sf(-z), with sf(-z) <= 1/2, so log1p stays well conditioned.
    const double upper_tail = log_gaussian_sf(-z).log();
    return LogProb(std::log1p(-std::exp(upper_tail)));
  }
  if (z < 8.0) {
    return LogProb(std::log(0.5 * std::erfc(z * kSqrt1_2)));
  }
  return LogProb(log_sf_asymptotic(z));
}

double logsumexp(std::span<const double> terms) {
  if (terms.empty()) throw std::invalid_argument("logsumexp: empty input");
  double max_term = kNegInf;
  for (double t : terms) max_term = std::max(max_term, t);
  if (max_term == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) {
    throw std::domain_error("regularized_incomplete_beta: a, b must be > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("regularized_incomplete_beta: x outside [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double clopper_pearson(std::int64_t successes, std::int64_t trials,
                       double confidence, BoundSide side) {
  if (trials < 1) throw std::domain_error("clopper_pearson: trials must be >= 1");
  if (successes < 0 || successes > trials) {
    throw std::domain_error("clopper_pearson: successes outside [0, trials]");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::domain_error("clopper_pearson: confidence outside (0, 1)");
  }
  const double k = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  if (side == BoundSide::kLower) {
    if (successes == 0) return 0.0;
    return beta_quantile(1.0 - confidence, k, n - k + 1.0);
  }
  if (successes == trials) return 1.0;
  return beta_quantile(confidence, k + 1.0, n - k);
}

}  // namespace lastiter
