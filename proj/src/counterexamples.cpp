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

#include "lastiter/counterexamples.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace lastiter {
namespace {

constexpr std::int64_t kMaxEnumerationSteps = 25;

double vector_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

void QuadraticParams::validate() const {
  base.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("QuadraticParams: alpha outside [0, 1]");
  }
  if (base.steps > kMaxEnumerationSteps) {
    throw std::invalid_argument(
        "QuadraticParams: steps > 25 would enumerate more than 2^25 patterns");
  }
}

ShiftMixture quadratic_mixture(const QuadraticParams& params) {
  params.validate();
  const std::int64_t steps = params.base.steps;
  const double q = params.base.sampling_rate;
  const double sigma = params.base.noise_multiplier;

  // Per-step contribution (1-alpha)^(i-1) and the summed noise variance.
  std::vector<double> step_weight(steps);
  double variance = 0.0;
  double w = 1.0;
  for (std::int64_t i = 0; i < steps; ++i) {
    step_weight[i] = w;
    variance += sigma * sigma * w * w;
    w *= 1.0 - params.alpha;
  }

  if (q == 0.0) return ShiftMixture(variance, {{0.0, 0.0}});
  if (q == 1.0) {
    double total = 0.0;
    for (double sw : step_weight) total += sw;
    return ShiftMixture(variance, {{total, 0.0}});
  }
  if (params.alpha == 1.0) {
    // Only the final step survives the regularizer.
    return ShiftMixture(variance, {{0.0, std::log1p(-q)}, {1.0, std::log(q)}});
  }

  const double log_q = std::log(q);
  const double log_1q = std::log1p(-q);
  const std::uint64_t pattern_count = std::uint64_t{1} << steps;
  std::vector<MixtureAtom> atoms(pattern_count);
  atoms[0] = {0.0, static_cast<double>(steps) * log_1q};
  for (std::uint64_t mask = 1; mask < pattern_count; ++mask) {
    // Reuse the shift of the mask without its lowest set bit.
    const int low_bit = std::countr_zero(mask);
    const double shift = atoms[mask & (mask - 1)].shift + step_weight[low_bit];
    const int included = std::popcount(mask);
    atoms[mask] = {shift, included * log_q + (steps - included) * log_1q};
  }
  return ShiftMixture(variance, std::move(atoms));
}

ShiftMixture round_support(const ShiftMixture& mix, double floor, double base) {
  if (!(floor > 0.0) || !(base > 1.0)) {
    throw std::invalid_argument("round_support: needs floor > 0, base > 1");
  }
  const double log_base = std::log(base);
  std::vector<MixtureAtom> atoms;
  atoms.reserve(mix.atoms().size());
  for (const auto& a : mix.atoms()) {
    double shift = a.shift;
    if (shift > 0.0) {
      shift = std::max(shift, floor);
      // Next integer power of `base`; the small slack keeps exact powers put.
      const double k = std::ceil(std::log(shift) / log_base - 1e-9);
      shift = std::pow(base, k);
    }
    atoms.push_back({shift, a.log_weight});
  }
  return ShiftMixture(mix.variance(), std::move(atoms));
}

QuadraticRatio quadratic_epsilon_ratio(const QuadraticParams& params,
                                       double delta,
                                       std::int64_t rounding_cap) {
  params.validate();
  ShiftMixture mix = quadratic_mixture(params);
  QuadraticRatio result;
  result.rounded = params.base.steps > rounding_cap;
  if (result.rounded) mix = round_support(mix);
  result.eps_quadratic = epsilon_from_delta(mix, delta);
  result.eps_linear_sweep = heuristic_sweep_max(params.base, delta).epsilon;
  result.ratio = result.eps_quadratic / result.eps_linear_sweep;
  return result;
}

double zeroing_regularizer_epsilon(const SgdParams& params, double delta) {
  params.validate();
  SgdParams single = params;
  single.steps = 1;
  return heuristic_epsilon(single, delta);
}

void EncoderConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("EncoderConfig: steps must be >= 1");
  if (!(sampling_rate > 0.0 && sampling_rate < 1.0)) {
    throw std::invalid_argument("EncoderConfig: sampling_rate outside (0, 1)");
  }
  if (!(noise_multiplier >= 0.0)) {
    throw std::invalid_argument("EncoderConfig: noise_multiplier must be >= 0");
  }
  if (batch_repeaters < 1) {
    throw std::invalid_argument("EncoderConfig: batch_repeaters must be >= 1");
  }
  if (!(big_val > 2.0 * t_past && t_past > 0.0)) {
    throw std::invalid_argument("EncoderConfig: needs big_val > 2*t_past > 0");
  }
  if (!(t_last > 0.0 && t_last < 1.0)) {
    throw std::invalid_argument("EncoderConfig: t_last outside (0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("EncoderConfig: learning_rate must be > 0");
  }
  if (!(clip_norm > 0.0)) {
    throw std::invalid_argument("EncoderConfig: clip_norm must be > 0");
  }
}

std::vector<double> encode_canary_gradient(std::int64_t iteration,
                                           std::int64_t dimension) {
  if (iteration < 0 || iteration >= dimension) {
    throw std::out_of_range("encode_canary_gradient: iteration out of range");
  }
  std::vector<double> g(dimension, 0.0);
  g[iteration] = -1.0;
  return g;
}

std::vector<double> encode_repeater_gradient(std::span<const double> model,
                                             std::int64_t iteration,
                                             const EncoderConfig& config) {
  const std::int64_t dim = config.steps;
  if (static_cast<std::int64_t>(model.size()) != dim) {
    throw std::invalid_argument("encode_repeater_gradient: model size != steps");
  }
  const double scale = 1.0 / (config.learning_rate * config.batch_repeaters);
  std::vector<double> target(dim);
  // Current and future coordinates: drive back to zero.
  for (std::int64_t j = iteration; j < dim; ++j) target[j] = -model[j] * scale;
  // Settled history: rewrite by the sign of the t_past test, on top of
  // cancelling whatever the coordinate currently holds.
  for (std::int64_t j = 0; j + 1 < iteration; ++j) {
    const double sign = model[j] >= config.t_past ? 1.0 : -1.0;
    target[j] = config.big_val * scale * sign - model[j] * scale;
  }
  // Freshest history coordinate: the actual inclusion decision.
  if (iteration >= 1) {
    const std::int64_t j = iteration - 1;
    const double sign = model[j] >= config.t_last ? 1.0 : -1.0;
    target[j] = config.big_val * scale * sign - model[j] * scale;
  }
  for (double& x : target) x = -x;
  return target;
}

EncoderTrace encode_attack_run(const EncoderConfig& config, bool with_canary,
                               std::uint64_t seed, std::uint64_t trial) {
  config.validate();
  const std::int64_t dim = config.steps;
  CounterRng rng(seed, with_canary ? 1u : 0u, trial);
  EncoderTrace trace;
  trace.canary_included = with_canary;
  trace.final_model.assign(dim, 0.0);
  trace.presence_bits.assign(dim, 0);
  std::vector<double>& m = trace.final_model;
  std::vector<double> z(dim);

  for (std::int64_t i = 0; i < dim; ++i) {
    const std::vector<double> grad = encode_repeater_gradient(m, i, config);
    const double norm = vector_norm(grad);
    if (norm > config.clip_norm * (1.0 + 1e-9)) {
      throw ClippingError(
          "encode_attack_run: repeater gradient clipped; raise batch_repeaters");
    }
    const double clip_scale =
        norm > config.clip_norm ? config.clip_norm / norm : 1.0;
    for (std::int64_t j = 0; j < dim; ++j) {
      z[j] = static_cast<double>(config.batch_repeaters) * clip_scale * grad[j];
    }
    // The canary coin is drawn on both arms to keep the draw layout aligned.
    const double coin = rng.uniform();
    if (with_canary && coin < config.sampling_rate) {
      trace.presence_bits[i] = 1;
      z[i] += -1.0;  // canary gradient -e_i, norm 1 <= clip_norm
    }
    const double noise_scale = config.noise_multiplier * config.clip_norm;
    for (std::int64_t j = 0; j < dim; ++j) {
      z[j] += noise_scale * rng.normal();
      m[j] -= config.learning_rate * z[j];
    }
  }
  return trace;
}

std::vector<std::uint8_t> decode_attack_bits(const EncoderTrace& trace,
                                             const EncoderConfig& config) {
  const std::int64_t dim = config.steps;
  std::vector<std::uint8_t> bits(dim, 0);
  for (std::int64_t j = 0; j < dim; ++j) {
    if (j + 1 < dim) {
      bits[j] = trace.final_model[j] > 0.0 ? 1 : 0;
    } else {
      bits[j] = trace.final_model[j] >= config.t_last * config.learning_rate ? 1 : 0;
    }
  }
  return bits;
}

double encoding_attack_score(const EncoderTrace& trace,
                             const EncoderConfig& config) {
  if (!(config.noise_multiplier > 0.0)) {
    throw std::invalid_argument("encoding_attack_score: needs noise > 0");
  }
  const double sigma = config.noise_multiplier;
  const double p = config.sampling_rate;
  const std::int64_t dim = config.steps;
  // Decision bit j was produced by comparing A_j + N(0, sigma^2) against
  // t_last (learning rate cancels).
  const double bit_threshold = config.t_last;
  const double p_bit_null = log_gaussian_sf(bit_threshold / sigma).probability();
  const double p_bit_canary =
      p * log_gaussian_sf((bit_threshold - 1.0) / sigma).probability() +
      (1.0 - p) * p_bit_null;
  const double llr_one = std::log(p_bit_canary / p_bit_null);
  const double llr_zero = std::log((1.0 - p_bit_canary) / (1.0 - p_bit_null));

  const std::vector<std::uint8_t> bits = decode_attack_bits(trace, config);
  double score = 0.0;
  for (std::int64_t j = 0; j + 1 < dim; ++j) {
    score += bits[j] ? llr_one : llr_zero;
  }
  // The freshest coordinate is still continuous: A + N(0, sigma^2), so its
  // likelihood ratio is (1-p) + p exp((2y - 1) / (2 sigma^2)).
  const double y = trace.final_model[dim - 1] / config.learning_rate;
  const double t = (2.0 * y - 1.0) / (2.0 * sigma * sigma);
  const double log_p_term = std::log(p) + t;
  const double log_1p = std::log1p(-p);
  const double m = std::max(log_1p, log_p_term);
  score += m + std::log1p(std::exp(std::min(log_1p, log_p_term) - m));
  return score;
}

void PathologicalConfig::validate() const {
  if (steps < 1) {
    throw std::invalid_argument("PathologicalConfig: steps must be >= 1");
  }
  if (!(sampling_rate > 0.0 && sampling_rate < 1.0)) {
    throw std::invalid_argument("PathologicalConfig: sampling_rate outside (0, 1)");
  }
  if (!(noise_multiplier >= 0.0)) {
    throw std::invalid_argument("PathologicalConfig: noise_multiplier must be >= 0");
  }
  if (!(amplification > 1.0)) {
    throw std::invalid_argument("PathologicalConfig: amplification must be > 1");
  }
}

EncoderTrace pathological_history_run(const PathologicalConfig& config,
                                      bool with_canary, std::uint64_t seed,
                                      std::uint64_t trial) {
  config.validate();
  const std::int64_t dim = config.steps;
  CounterRng rng(seed, with_canary ? 3u : 2u, trial);
  EncoderTrace trace;
  trace.canary_included = with_canary;
  trace.final_model.assign(dim, 0.0);
  trace.presence_bits.assign(dim, 0);
  std::vector<double>& m = trace.final_model;
  for (std::int64_t t = 0; t < dim; ++t) {
    for (std::int64_t j = dim - 1; j >= 1; --j) {
      m[j] = config.amplification * m[j - 1];
    }
    m[0] = 0.0;
    const double coin = rng.uniform();
    if (with_canary && coin < config.sampling_rate) {
      trace.presence_bits[t] = 1;
      m[0] += 1.0;
    }
    for (std::int64_t j = 0; j < dim; ++j) {
      m[j] += config.noise_multiplier * rng.normal();
    }
  }
  return trace;
}

std::vector<double> decode_history(const EncoderTrace& trace,
                                   double amplification) {
  const std::size_t dim = trace.final_model.size();
  std::vector<double> decoded(dim);
  double scale = 1.0;
  for (std::size_t j = 0; j < dim; ++j) {
    decoded[j] = trace.final_model[j] * scale;
    scale /= amplification;
  }
  return decoded;
}

}  // namespace lastiter
