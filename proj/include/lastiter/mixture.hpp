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
// Privacy accounting for the pair
//   P = sum_j w_j N(s_j, v)   vs   Q = N(0, v)
// with nonnegative shifts s_j. The noisy-SGD last-iterate pair
// (Binomial(T,q) + N(0, T sigma^2) vs N(0, T sigma^2)) is the flagship
// instance; the quadratic-regularizer construction produces others.

#ifndef LASTITER_MIXTURE_HPP_
#define LASTITER_MIXTURE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "lastiter/numerics.hpp"

namespace lastiter {

// Hyperparameters of noisy clipped SGD: steps T, Poisson sampling rate q,
// noise multiplier sigma, learning rate eta (only simulators/baselines use
// eta).
struct SgdParams {
  std::int64_t steps = 1;
  double sampling_rate = 0.0;
  double noise_multiplier = 1.0;
  double learning_rate = 1.0;

  void validate() const;
};

// An (epsilon, delta) privacy claim.
struct PrivacyPoint {
  double epsilon = 0.0;
  double delta = 0.0;

  void validate() const;
};

struct MixtureAtom {
  double shift;       // nonnegative mean offset of the component
  double log_weight;  // ln of its mixture probability
};

// The distinguishing pair above. Atoms are stored sorted by strictly
// increasing shift; construction sorts, merges shifts closer than 1e-12,
// drops zero-mass atoms, checks the total mass is 1 within 1e-9 and then
// renormalizes it exactly.
class ShiftMixture {
 public:
  ShiftMixture(double variance, std::vector<MixtureAtom> atoms);

  double variance() const { return variance_; }
  double stddev() const { return stddev_; }
  const std::vector<MixtureAtom>& atoms() const { return atoms_; }

  // True when the mixture is a single atom at shift zero, i.e. P == Q.
  bool is_null_pair() const {
    return atoms_.size() == 1 && atoms_[0].shift == 0.0;
  }
  double max_shift() const { return atoms_.back().shift; }

  // inf_y f(y): ln w_0 when a zero shift is present, -inf otherwise.
  double min_privacy_loss() const;

 private:
  double variance_;
  double stddev_;
  std::vector<MixtureAtom> atoms_;
};

// Tolerances fixed by the accountant: epsilon searches stop at 1e-7 absolute
// (tight enough that two independently inverted routes agree within 1e-6),
// and privacy-loss inversion resolves y to 1e-12 * stddev.
inline constexpr double kEpsilonTol = 1e-7;
inline constexpr double kLossInversionTol = 1e-12;

// The last-iterate distinguishing pair: variance T sigma^2 and
// Binomial(T, q) weights on integer shifts. For T > 1000, atoms whose
// log-mass falls more than ln(1e-18) below the mode are dropped and the rest
// renormalized, keeping evaluation O(sqrt(T)) for the large sweeps.
ShiftMixture binomial_gaussian_pair(const SgdParams& params);

// The privacy loss f(y) = ln(P(y)/Q(y))
//                       = ln sum_j w_j exp( s_j (2y - s_j) / (2v) ),
// nondecreasing in y, strictly increasing when any shift is positive.
double privacy_loss_at(const ShiftMixture& mix, double y);

// Solves f(y) = target. Returns nullopt when target <= inf f, i.e. the set
// {y : f(y) <= target} is empty. Requires at least one positive shift.
std::optional<double> inverse_privacy_loss(const ShiftMixture& mix,
                                           double target);

// H_{e^eps}(P, Q) = sum_j w_j Pr[N(s_j,v) >= y*] - e^eps Pr[N(0,v) >= y*]
// with y* = f^{-1}(eps). Computed in the log domain with an expm1 guard for
// the near-cancelling difference; clamped to [0, 1].
double hockey_stick_pq(const ShiftMixture& mix, double epsilon);

// The reversed divergence H_{e^eps}(Q, P), using y** = f^{-1}(-eps); zero
// when -eps <= inf f.
double hockey_stick_qp(const ShiftMixture& mix, double epsilon);

// delta(eps) = max of the two one-sided divergences; nonincreasing in eps.
double delta_from_epsilon(const ShiftMixture& mix, double epsilon);

// min{ eps >= 0 : delta(eps) <= delta }, by bisection with a doubling upper
// bracket. The returned value satisfies delta(eps) <= delta while
// delta(eps - 2 tol) > delta.
double epsilon_from_delta(const ShiftMixture& mix, double delta,
                          double tol = kEpsilonTol);

// epsilon_from_delta on the binomial-Gaussian pair for the given parameters.
double heuristic_epsilon(const SgdParams& params, double delta);

struct SweepResult {
  double epsilon = 0.0;
  std::int64_t argmax_steps = 1;
};

struct SweepOptions {
  // Every step count up to linear_cutoff is evaluated; past it the grid grows
  // geometrically (final T always included).
  std::int64_t linear_cutoff = 256;
  double geometric_ratio = 1.05;
};

// max_{t <= T} epsilon_{t,q,sigma}(delta) with its argmax; ties go to the
// smaller step count.
SweepResult heuristic_sweep_max(const SgdParams& params, double delta,
                                const SweepOptions& options = {});

}  // namespace lastiter

#endif  // LASTITER_MIXTURE_HPP_
