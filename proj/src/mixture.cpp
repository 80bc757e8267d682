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

#include "lastiter/mixture.hpp"

#include <algorithm>
#include <cmath>

namespace lastiter {
namespace {

constexpr double kShiftMergeTol = 1e-12;
constexpr double kMassCheckTol = 1e-9;
// Relative log-mass floor for truncating binomial tails on large T.
constexpr double kTruncationLogFloor = -41.446531673892822;  // ln(1e-18)
constexpr std::int64_t kTruncationMinSteps = 1000;

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// exp(a) - exp(b) for a >= b (up to rounding), without catastrophic
// cancellation when the two are close. Negative results from rounding are
// clamped by the callers.
double exp_diff(double a, double b) {
  if (a == kNegInf) return 0.0;
  return -std::exp(a) * std::expm1(b - a);
}

}  // namespace

void SgdParams::validate() const {
  if (steps < 1) throw std::invalid_argument("SgdParams: steps must be >= 1");
  if (!(sampling_rate >= 0.0 && sampling_rate <= 1.0)) {
    throw std::invalid_argument("SgdParams: sampling_rate outside [0, 1]");
  }
  if (!(noise_multiplier > 0.0)) {
    throw std::invalid_argument("SgdParams: noise_multiplier must be > 0");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("SgdParams: learning_rate must be > 0");
  }
}

void PrivacyPoint::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("PrivacyPoint: epsilon < 0");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("PrivacyPoint: delta outside [0, 1]");
  }
}

ShiftMixture::ShiftMixture(double variance, std::vector<MixtureAtom> atoms)
    : variance_(variance), atoms_(std::move(atoms)) {
  if (!(variance_ > 0.0)) {
    throw std::invalid_argument("ShiftMixture: variance must be > 0");
  }
  stddev_ = std::sqrt(variance_);
  std::erase_if(atoms_, [](const MixtureAtom& a) { return a.log_weight == kNegInf; });
  if (atoms_.empty()) {
    throw std::invalid_argument("ShiftMixture: needs at least one atom");
  }
  std::sort(atoms_.begin(), atoms_.end(),
            [](const MixtureAtom& a, const MixtureAtom& b) {
              return a.shift < b.shift;
            });
  if (atoms_.front().shift < 0.0) {
    throw std::invalid_argument("ShiftMixture: shifts must be >= 0");
  }
  // Merge shifts that coincide up to tolerance.
  std::size_t out = 0;
  for (std::size_t i = 1; i < atoms_.size(); ++i) {
    if (atoms_[i].shift - atoms_[out].shift < kShiftMergeTol) {
      atoms_[out].log_weight =
          logaddexp(atoms_[out].log_weight, atoms_[i].log_weight);
    } else {
      atoms_[++out] = atoms_[i];
    }
  }
  atoms_.resize(out + 1);
  // Total mass must be 1 up to accumulated rounding; normalize the rest away.
  double max_lw = kNegInf;
  for (const auto& a : atoms_) max_lw = std::max(max_lw, a.log_weight);
  double acc = 0.0;
  for (const auto& a : atoms_) acc += std::exp(a.log_weight - max_lw);
  const double total = max_lw + std::log(acc);
  if (std::fabs(total) > kMassCheckTol) {
    throw std::invalid_argument("ShiftMixture: probabilities do not sum to 1");
  }
  for (auto& a : atoms_) a.log_weight -= total;
}

double ShiftMixture::min_privacy_loss() const {
  if (atoms_.front().shift == 0.0) return atoms_.front().log_weight;
  return kNegInf;
}

ShiftMixture binomial_gaussian_pair(const SgdParams& params) {
  params.validate();
  const std::int64_t steps = params.steps;
  const double q = params.sampling_rate;
  const double variance =
      static_cast<double>(steps) * params.noise_multiplier * params.noise_multiplier;
  if (q == 0.0) return ShiftMixture(variance, {{0.0, 0.0}});
  if (q == 1.0) {
    return ShiftMixture(variance, {{static_cast<double>(steps), 0.0}});
  }
  std::vector<MixtureAtom> atoms;
  if (steps <= kTruncationMinSteps) {
    atoms.reserve(steps + 1);
    for (std::int64_t k = 0; k <= steps; ++k) {
      atoms.push_back({static_cast<double>(k), log_binom_pmf(steps, k, q).log()});
    }
  } else {
    // Walk outward from the mode until the mass falls 1e-18 below it.
    const std::int64_t mode = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(q * (steps + 1)), 0, steps);
    const double mode_lw = log_binom_pmf(steps, mode, q).log();
    const double floor_lw = mode_lw + kTruncationLogFloor;
    std::vector<MixtureAtom> upper;
    for (std::int64_t k = mode; k <= steps; ++k) {
      const double lw = log_binom_pmf(steps, k, q).log();
      if (lw < floor_lw) break;
      upper.push_back({static_cast<double>(k), lw});
    }
    for (std::int64_t k = mode - 1; k >= 0; --k) {
      const double lw = log_binom_pmf(steps, k, q).log();
      if (lw < floor_lw) break;
      atoms.push_back({static_cast<double>(k), lw});
    }
    atoms.insert(atoms.end(), upper.begin(), upper.end());
  }
  return ShiftMixture(variance, std::move(atoms));
}

double privacy_loss_at(const ShiftMixture& mix, double y) {
  const double inv_2v = 0.5 / mix.variance();
  double max_term = kNegInf;
  for (const auto& a : mix.atoms()) {
    const double t = a.log_weight + a.shift * (2.0 * y - a.shift) * inv_2v;
    max_term = std::max(max_term, t);
  }
  if (max_term == kNegInf) return kNegInf;
  double acc = 0.0;
  for (const auto& a : mix.atoms()) {
    acc += std::exp(a.log_weight + a.shift * (2.0 * y - a.shift) * inv_2v -
                    max_term);
  }
  return max_term + std::log(acc);
}

std::optional<double> inverse_privacy_loss(const ShiftMixture& mix,
                                           double target) {
  if (mix.max_shift() <= 0.0) {
    throw std::invalid_argument(
        "inverse_privacy_loss: needs a positive shift");
  }
  if (target <= mix.min_privacy_loss()) return std::nullopt;
  const double scale = std::max({1.0, mix.stddev(), mix.max_shift()});
  double lo = -scale;
  double hi = scale;
  int expand = 0;
  while (privacy_loss_at(mix, lo) > target) {
    lo = 2.0 * lo - 1.0;
    if (++expand > 200) throw BracketError("inverse_privacy_loss: no lower bracket");
  }
  expand = 0;
  while (privacy_loss_at(mix, hi) < target) {
    hi = 2.0 * hi + 1.0;
    if (++expand > 200) throw BracketError("inverse_privacy_loss: no upper bracket");
  }
  return invert_monotone([&](double y) { return privacy_loss_at(mix, y); },
                         target, Bracket{lo, hi},
                         kLossInversionTol * mix.stddev());
}

double hockey_stick_pq(const ShiftMixture& mix, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("hockey_stick_pq: epsilon < 0");
  if (mix.is_null_pair()) return 0.0;
  // For eps >= 0 the threshold always exists: inf f = ln w_0 < 0.
  const double y_star = inverse_privacy_loss(mix, epsilon).value();
  const double sd = mix.stddev();
  double max_term = kNegInf;
  for (const auto& a : mix.atoms()) {
    const double t = a.log_weight + log_gaussian_sf((y_star - a.shift) / sd).log();
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (const auto& a : mix.atoms()) {
    acc += std::exp(a.log_weight + log_gaussian_sf((y_star - a.shift) / sd).log() -
                    max_term);
  }
  const double log_p_tail = max_term == kNegInf ? kNegInf : max_term + std::log(acc);
  const double log_q_tail = epsilon + log_gaussian_sf(y_star / sd).log();
  return std::clamp(exp_diff(log_p_tail, log_q_tail), 0.0, 1.0);
}

double hockey_stick_qp(const ShiftMixture& mix, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("hockey_stick_qp: epsilon < 0");
  if (mix.is_null_pair()) return 0.0;
  const std::optional<double> y_star = inverse_privacy_loss(mix, -epsilon);
  if (!y_star) return 0.0;  // {y : f(y) <= -eps} is empty
  const double sd = mix.stddev();
  // Q(y <= y*) = sf(-y*/sd); P(y <= y*) = sum_j w_j sf((s_j - y*)/sd).
  const double log_q_tail = log_gaussian_sf(-*y_star / sd).log();
  double max_term = kNegInf;
  for (const auto& a : mix.atoms()) {
    const double t = a.log_weight + log_gaussian_sf((a.shift - *y_star) / sd).log();
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (const auto& a : mix.atoms()) {
    acc += std::exp(a.log_weight + log_gaussian_sf((a.shift - *y_star) / sd).log() -
                    max_term);
  }
  const double log_p_tail = max_term == kNegInf ? kNegInf : max_term + std::log(acc);
  return std::clamp(exp_diff(log_q_tail, epsilon + log_p_tail), 0.0, 1.0);
}

double delta_from_epsilon(const ShiftMixture& mix, double epsilon) {
  return std::max(hockey_stick_pq(mix, epsilon), hockey_stick_qp(mix, epsilon));
}

double epsilon_from_delta(const ShiftMixture& mix, double delta, double tol) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("epsilon_from_delta: delta outside (0, 1)");
  }
  if (mix.is_null_pair()) return 0.0;
  if (delta_from_epsilon(mix, 0.0) <= delta) return 0.0;
  double hi = 1.0;
  while (delta_from_epsilon(mix, hi) > delta) {
    hi *= 2.0;
    if (hi > 1e9) throw BracketError("epsilon_from_delta: no upper bracket");
  }
  double lo = hi > 1.0 ? hi / 2.0 : 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (delta_from_epsilon(mix, mid) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;  // upper end: delta(hi) <= delta is guaranteed
}

double heuristic_epsilon(const SgdParams& params, double delta) {
  return epsilon_from_delta(binomial_gaussian_pair(params), delta);
}

SweepResult heuristic_sweep_max(const SgdParams& params, double delta,
                                const SweepOptions& options) {
  params.validate();
  SweepResult best{-1.0, 1};
  const auto consider = [&](std::int64_t t) {
    SgdParams p = params;
    p.steps = t;
    const double eps = heuristic_epsilon(p, delta);
    if (eps > best.epsilon) best = {eps, t};
  };
  std::int64_t t = 1;
  const std::int64_t linear_end = std::min(params.steps, options.linear_cutoff);
  for (; t <= linear_end; ++t) consider(t);
  double next = static_cast<double>(linear_end) * options.geometric_ratio;
  while (t <= params.steps) {
    consider(t);
    next *= options.geometric_ratio;
    t = std::max(t + 1, static_cast<std::int64_t>(next));
  }
  if (best.argmax_steps != params.steps && linear_end < params.steps) {
    consider(params.steps);
  }
  return best;
}

}  // namespace lastiter
