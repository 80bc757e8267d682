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

#include "lastiter/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace lastiter {
namespace {

constexpr double kLn2 = 0.693147180559945309417232121458;
constexpr double kSqrt2 = 1.414213562373095048801688724210;

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// a - b in log space for a >= b; -inf when the difference cancels entirely.
double logsubexp(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_erfc(double x) { return kLn2 + log_gaussian_sf(x * kSqrt2).log(); }

bool is_integer_order(double order) {
  return std::fabs(order - std::round(order)) < 1e-9;
}

// Exact finite sum for integer order a:
//   A_a = sum_{i=0}^{a} C(a,i) q^i (1-q)^(a-i) exp(i(i-1)/(2 sigma^2)).
double rdp_integer_order(double q, double sigma, std::int64_t a) {
  const double inv_2s2 = 0.5 / (sigma * sigma);
  double acc = kNegInf;
  for (std::int64_t i = 0; i <= a; ++i) {
    const double term = log_binom_pmf(a, i, q).log();
    acc = logaddexp(acc, term + static_cast<double>(i) * (i - 1.0) * inv_2s2);
  }
  return std::max(0.0, acc / (static_cast<double>(a) - 1.0));
}

// Two-sided series for fractional order, splitting the integral of
// ((1-q) + q e^u)^a against the Gaussian at z0 where both parts converge.
double rdp_fractional_order(double q, double sigma, double a) {
  const double s2 = sigma * sigma;
  const double z0 = s2 * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1q = std::log1p(-q);
  double log_a0 = kNegInf;
  double log_a1 = kNegInf;
  double log_coef_abs = 0.0;  // ln |C(a, i)|, updated incrementally
  bool coef_positive = true;
  for (int i = 0; i <= 200000; ++i) {
    if (i > 0) {
      const double factor = (a - i + 1.0) / i;
      log_coef_abs += std::log(std::fabs(factor));
      if (factor < 0.0) coef_positive = !coef_positive;
    }
    const double j = a - i;
    const double log_t0 = log_coef_abs + i * log_q + j * log_1q;
    const double log_t1 = log_coef_abs + j * log_q + i * log_1q;
    const double log_e0 = -kLn2 + log_erfc((i - z0) / (kSqrt2 * sigma));
    const double log_e1 = -kLn2 + log_erfc((z0 - j) / (kSqrt2 * sigma));
    const double log_s0 = log_t0 + (i * i - i) / (2.0 * s2) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * s2) + log_e1;
    if (coef_positive) {
      log_a0 = logaddexp(log_a0, log_s0);
      log_a1 = logaddexp(log_a1, log_s1);
    } else {
      log_a0 = logsubexp(log_a0, log_s0);
      log_a1 = logsubexp(log_a1, log_s1);
    }
    if (i > a && std::max(log_s0, log_s1) <
                     std::max(logaddexp(log_a0, log_a1), 0.0) - 40.0) {
      break;
    }
  }
  return std::max(0.0, logaddexp(log_a0, log_a1) / (a - 1.0));
}

}  // namespace

SgdParams fullbatch_rescale(const SgdParams& params) {
  params.validate();
  if (params.sampling_rate == 0.0) {
    throw std::invalid_argument("fullbatch_rescale: undefined at q = 0");
  }
  return SgdParams{params.steps, 1.0,
                   params.noise_multiplier / params.sampling_rate,
                   params.learning_rate * params.sampling_rate};
}

double gdp_mu(const SgdParams& params) {
  params.validate();
  return std::sqrt(static_cast<double>(params.steps)) / params.noise_multiplier;
}

double gaussian_mechanism_delta(double mu, double epsilon) {
  if (!(mu > 0.0)) throw std::invalid_argument("gaussian_mechanism_delta: mu <= 0");
  if (epsilon < 0.0) {
    throw std::invalid_argument("gaussian_mechanism_delta: epsilon < 0");
  }
  // Phi(mu/2 - eps/mu) = sf(eps/mu - mu/2); Phi(-mu/2 - eps/mu) = sf(eps/mu + mu/2).
  const double a = log_gaussian_sf(epsilon / mu - mu / 2.0).log();
  const double b = epsilon + log_gaussian_sf(epsilon / mu + mu / 2.0).log();
  if (a == kNegInf) return 0.0;
  return std::clamp(-std::exp(a) * std::expm1(b - a), 0.0, 1.0);
}

double gaussian_mechanism_epsilon(double mu, double delta, double tol) {
  if (!(mu > 0.0)) throw std::invalid_argument("gaussian_mechanism_epsilon: mu <= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("gaussian_mechanism_epsilon: delta outside (0, 1)");
  }
  if (gaussian_mechanism_delta(mu, 0.0) <= delta) return 0.0;
  double hi = 1.0;
  while (gaussian_mechanism_delta(mu, hi) > delta) {
    hi *= 2.0;
    if (hi > 1e9) throw BracketError("gaussian_mechanism_epsilon: no bracket");
  }
  double lo = hi > 1.0 ? hi / 2.0 : 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (gaussian_mechanism_delta(mu, mid) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double subsampled_gaussian_rdp(double q, double sigma, double order) {
  if (!(order > 1.0)) {
    throw std::invalid_argument("subsampled_gaussian_rdp: order must be > 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("subsampled_gaussian_rdp: sigma must be > 0");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("subsampled_gaussian_rdp: q outside [0, 1]");
  }
  if (q == 0.0) return 0.0;
  if (q == 1.0) return order / (2.0 * sigma * sigma);
  if (is_integer_order(order)) {
    return rdp_integer_order(q, sigma, static_cast<std::int64_t>(std::round(order)));
  }
  return rdp_fractional_order(q, sigma, order);
}

const std::vector<double>& default_renyi_orders() {
  static const std::vector<double>* orders = [] {
    auto* v = new std::vector<double>;
    v->push_back(1.25);
    v->push_back(1.5);
    v->push_back(1.75);
    for (double a = 2.0; a <= 64.0; a += 0.25) v->push_back(a);
    v->push_back(128.0);
    v->push_back(256.0);
    v->push_back(512.0);
    return v;
  }();
  return *orders;
}

double standard_epsilon(const SgdParams& params, double delta,
                        std::span<const double> orders) {
  params.validate();
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("standard_epsilon: delta outside (0, 1)");
  }
  const double q = params.sampling_rate;
  if (q == 0.0) return 0.0;
  if (q == 1.0) return gaussian_mechanism_epsilon(gdp_mu(params), delta);
  if (orders.empty()) orders = default_renyi_orders();
  double best = kInf;
  int since_improvement = 0;
  for (double order : orders) {
    const double rdp = static_cast<double>(params.steps) *
                       subsampled_gaussian_rdp(q, params.noise_multiplier, order);
    // Renyi-to-DP conversion; the log((a-1)/a) - log(delta a)/(a-1) form is
    // tighter than the classic log(1/delta)/(a-1).
    const double eps = rdp + std::log1p(-1.0 / order) -
                       (std::log(delta) + std::log(order)) / (order - 1.0);
    if (eps < best) {
      best = eps;
      since_improvement = 0;
    } else if (++since_improvement > 16) {
      break;  // eps(order) is unimodal in practice; stop once clearly past it
    }
  }
  return std::max(0.0, best);
}

double sigma_for_standard_epsilon(std::int64_t steps, double q,
                                  double target_epsilon, double delta) {
  if (!(target_epsilon > 0.0)) {
    throw std::invalid_argument("sigma_for_standard_epsilon: target must be > 0");
  }
  const auto eps_at = [&](double sigma) {
    const SgdParams p{steps, q, sigma, 1.0};
    // One step has an exact accountant; prefer it over the Renyi bound.
    return steps == 1 ? heuristic_epsilon(p, delta) : standard_epsilon(p, delta);
  };
  double lo = 0.05;
  double hi = 1.0;
  int expand = 0;
  while (eps_at(hi) > target_epsilon) {
    hi *= 2.0;
    if (++expand > 60) {
      throw BracketError("sigma_for_standard_epsilon: target unreachable (low)");
    }
  }
  expand = 0;
  while (eps_at(lo) < target_epsilon) {
    lo *= 0.5;
    if (++expand > 60) {
      throw BracketError("sigma_for_standard_epsilon: target unreachable (high)");
    }
  }
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) > target_epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lastiter
