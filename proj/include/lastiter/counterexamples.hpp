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
// Constructions that stress the last-iterate analysis: the quadratic
// regularizer mixture (with support rounding), the zeroing regularizer, a
// history-encoding attack where crafted batch members turn the model into
// noisy storage of the sampling pattern, and the analytic shift-register
// variant of that attack.

#ifndef LASTITER_COUNTEREXAMPLES_HPP_
#define LASTITER_COUNTEREXAMPLES_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "lastiter/mixture.hpp"
#include "lastiter/rng.hpp"

namespace lastiter {

// Thrown when a crafted batch would be clipped, which breaks the premise the
// encoding attack is built on.
struct ClippingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear loss plus quadratic regularizer of strength alpha in [0, 1].
struct QuadraticParams {
  SgdParams base;
  double alpha = 0.5;

  void validate() const;
};

// Enumerates all 2^T sampling patterns of the quadratic-regularizer dynamics:
// shift sum_{i in S} (1-alpha)^(i-1), total variance
// sigma^2 sum_i (1-alpha)^(2(i-1)). alpha = 0 reproduces the binomial pair,
// alpha = 1 the single-step pair. Requires T <= 25.
ShiftMixture quadratic_mixture(const QuadraticParams& params);

// Rounds every positive shift up: first to at least `floor`, then to the next
// integer power of `base`. Colliding shifts merge. The rounded pair is at
// least as distinguishable as the input, so its epsilon dominates.
ShiftMixture round_support(const ShiftMixture& mix, double floor = 5e-4,
                           double base = 1.05);

struct QuadraticRatio {
  double ratio = 0.0;
  double eps_quadratic = 0.0;
  double eps_linear_sweep = 0.0;
  bool rounded = false;
};

// epsilon of the (rounded when T > rounding_cap) quadratic mixture over the
// best linear sweep epsilon max_{t <= T} eps_t.
QuadraticRatio quadratic_epsilon_ratio(const QuadraticParams& params,
                                       double delta,
                                       std::int64_t rounding_cap = 12);

// A regularizer that zeroes the previous iterate leaves the last iterate with
// exactly one step's privacy: eps_{1,q,sigma}(delta).
double zeroing_regularizer_epsilon(const SgdParams& params, double delta);

// Configuration of the history-encoding attack. The model dimension equals
// the step count; each iteration writes its sampling bit into one coordinate
// and crafted "repeater" points amplify past decisions. noise_multiplier = 0
// is allowed (noiseless checks). Defaults are chosen so that repeater
// gradients stay unclipped and amplified values cannot be flipped by noise;
// all of them are overridable.
struct EncoderConfig {
  std::int64_t steps = 16;          // also the model dimension
  double sampling_rate = 0.1;       // canary inclusion probability per step
  double noise_multiplier = 1.0;
  std::int64_t batch_repeaters = 1 << 17;
  double big_val = 1e4;
  double t_past = 2.5e3;
  double t_last = 0.5;
  double learning_rate = 1.0;
  double clip_norm = 1.0;

  void validate() const;
};

// Output of one simulated run: the released model, the true per-iteration
// inclusion bits, and which dataset (with or without the canary) was used.
struct EncoderTrace {
  std::vector<double> final_model;
  std::vector<std::uint8_t> presence_bits;
  bool canary_included = false;
};

// Canary gradient at iteration i (0-based): minus the i-th basis vector, so
// its clipped norm is exactly 1.
std::vector<double> encode_canary_gradient(std::int64_t iteration,
                                           std::int64_t dimension);

// One repeater's gradient (pre-clipping): cancels current and future
// coordinates, rewrites settled history by the t_past sign test, and decides
// the freshest coordinate by the t_last test.
std::vector<double> encode_repeater_gradient(std::span<const double> model,
                                             std::int64_t iteration,
                                             const EncoderConfig& config);

// Runs the noisy training loop with repeaters plus (optionally) the canary
// sampled at rate p per step. Throws ClippingError if the repeater batch
// would be clipped.
EncoderTrace encode_attack_run(const EncoderConfig& config, bool with_canary,
                               std::uint64_t seed, std::uint64_t trial = 0);

// Hard bit decisions from a final model: sign test on amplified coordinates,
// t_last test on the freshest one.
std::vector<std::uint8_t> decode_attack_bits(const EncoderTrace& trace,
                                             const EncoderConfig& config);

// Log-likelihood ratio of the released model between the with- and
// without-canary distributions; the natural scalar audit score. Requires a
// positive noise multiplier.
double encoding_attack_score(const EncoderTrace& trace,
                             const EncoderConfig& config);

// Analytic pathological variant: the update first applies the shift register
// m[0] <- 0, m[i] <- v * m[i-1], then adds the canary bit to m[0] and fresh
// noise everywhere. The final model stores every A_t at geometric scale.
struct PathologicalConfig {
  std::int64_t steps = 16;
  double sampling_rate = 0.1;
  double noise_multiplier = 1.0;
  double amplification = 100.0;  // v > 1

  void validate() const;
};

EncoderTrace pathological_history_run(const PathologicalConfig& config,
                                      bool with_canary, std::uint64_t seed,
                                      std::uint64_t trial = 0);

// Rescales coordinate i by v^(-i); entry i is then an unbiased estimate of
// the inclusion bit of step T - i with variance
// sigma^2 (1 - v^(-2(i+1))) / (1 - v^(-2)).
std::vector<double> decode_history(const EncoderTrace& trace,
                                   double amplification);

}  // namespace lastiter

#endif  // LASTITER_COUNTEREXAMPLES_HPP_
