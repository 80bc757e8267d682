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

#include <cmath>

#include <doctest.h>

#include "lastiter/counterexamples.hpp"

using namespace lastiter;

TEST_CASE("quadratic_mixture at the extremes") {
  // alpha = 0: identical to the plain binomial pair.
  const QuadraticParams linear{{3, 0.1, 1.0, 1.0}, 0.0};
  const ShiftMixture lin = quadratic_mixture(linear);
  const ShiftMixture binom = binomial_gaussian_pair({3, 0.1, 1.0, 1.0});
  REQUIRE(lin.atoms().size() == binom.atoms().size());
  CHECK(lin.variance() == doctest::Approx(binom.variance()));
  for (std::size_t i = 0; i < lin.atoms().size(); ++i) {
    CHECK(lin.atoms()[i].shift == doctest::Approx(binom.atoms()[i].shift));
    CHECK(lin.atoms()[i].log_weight ==
          doctest::Approx(binom.atoms()[i].log_weight).epsilon(1e-12));
  }

  // alpha = 1: the single-step pair at variance sigma^2.
  const QuadraticParams one{{9, 0.1, 1.3, 1.0}, 1.0};
  const ShiftMixture m1 = quadratic_mixture(one);
  CHECK(m1.variance() == doctest::Approx(1.69));
  REQUIRE(m1.atoms().size() == 2);
  CHECK(std::exp(m1.atoms()[0].log_weight) == doctest::Approx(0.9));
  CHECK(m1.atoms()[1].shift == 1.0);
}

TEST_CASE("quadratic_mixture alpha=1/2 dyadic structure") {
  const QuadraticParams params{{3, 0.1, 1.0, 1.0}, 0.5};
  const ShiftMixture mix = quadratic_mixture(params);
  CHECK(mix.variance() == doctest::Approx(1.3125));  // 1 + 1/4 + 1/16
  REQUIRE(mix.atoms().size() == 8);
  const double shifts[] = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75};
  const double probs[] = {0.729, 0.081, 0.081, 0.009,
                          0.081, 0.009, 0.009, 0.001};
  for (int i = 0; i < 8; ++i) {
    CHECK(mix.atoms()[i].shift == doctest::Approx(shifts[i]));
    CHECK(std::exp(mix.atoms()[i].log_weight) ==
          doctest::Approx(probs[i]).epsilon(1e-12));
  }
}

TEST_CASE("quadratic_mixture mass, size and variance formula") {
  for (std::int64_t steps : {1, 5, 12, 16, 20}) {
    const double alpha = 0.37;
    const double sigma = 0.9;
    const QuadraticParams params{{steps, 0.2, sigma, 1.0}, alpha};
    const ShiftMixture mix = quadratic_mixture(params);
    // Generic alpha: no two of the 2^T subset sums coincide.
    CHECK(mix.atoms().size() == (std::size_t{1} << steps));
    long double total = 0.0L;
    for (const auto& a : mix.atoms()) {
      total += std::exp(static_cast<long double>(a.log_weight));
    }
    CHECK(std::fabs(static_cast<double>(total) - 1.0) < 1e-12);
    double variance = 0.0;
    for (std::int64_t i = 0; i < steps; ++i) {
      variance += sigma * sigma * std::pow(1.0 - alpha, 2.0 * i);
    }
    CHECK(mix.variance() == doctest::Approx(variance).epsilon(1e-12));
  }
  CHECK_THROWS_AS(quadratic_mixture({{26, 0.1, 1.0, 1.0}, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(quadratic_mixture({{3, 0.1, 1.0, 1.0}, 1.5}),
                  std::invalid_argument);
}

TEST_CASE("round_support rounding rules") {
  const ShiftMixture mix(1.0, {{0.0, std::log(0.4)},
                               {0.0003, std::log(0.2)},
                               {0.6, std::log(0.2)},
                               {1.0, std::log(0.2)}});
  const ShiftMixture rounded = round_support(mix);
  REQUIRE(rounded.atoms().size() == 4);
  CHECK(rounded.atoms()[0].shift == 0.0);  // zero stays put
  // 0.0003 is floored to 5e-4, then lifted to the next power of 1.05.
  const double floored = std::pow(
      1.05, std::ceil(std::log(5e-4) / std::log(1.05) - 1e-9));
  CHECK(rounded.atoms()[1].shift == doctest::Approx(floored));
  CHECK(rounded.atoms()[1].shift >= 5e-4);
  // ceil(ln 0.6 / ln 1.05) = -10.
  CHECK(rounded.atoms()[2].shift == doctest::Approx(std::pow(1.05, -10)));
  // Exact powers are fixed points.
  CHECK(rounded.atoms()[3].shift == doctest::Approx(1.0));
  // Rounding never lowers a shift.
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rounded.atoms()[i].shift >= mix.atoms()[i].shift - 1e-15);
  }
}

TEST_CASE("round_support merges collisions and preserves mass") {
  const QuadraticParams params{{10, 0.15, 1.0, 1.0}, 0.5};
  const ShiftMixture mix = quadratic_mixture(params);
  const ShiftMixture rounded = round_support(mix);
  CHECK(rounded.atoms().size() < mix.atoms().size());
  long double total = 0.0L;
  for (const auto& a : rounded.atoms()) {
    total += std::exp(static_cast<long double>(a.log_weight));
  }
  CHECK(std::fabs(static_cast<double>(total) - 1.0) < 1e-12);
}

TEST_CASE("rounding dominance on a small grid") {
  for (double q : {0.1, 0.3}) {
    for (double alpha : {0.3, 0.5}) {
      const QuadraticParams params{{6, q, 1.0, 1.0}, alpha};
      const ShiftMixture mix = quadratic_mixture(params);
      const double exact = epsilon_from_delta(mix, 1e-6);
      const double rounded = epsilon_from_delta(round_support(mix), 1e-6);
      CHECK(rounded >= exact - 1e-6);
    }
  }
}

TEST_CASE("quadratic_epsilon_ratio reported triple") {
  const QuadraticParams params{{3, 0.1, 1.0, 1.0}, 0.5};
  const QuadraticRatio r = quadratic_epsilon_ratio(params, 1e-6);
  CHECK_FALSE(r.rounded);
  CHECK(r.eps_quadratic >= 2.274 - 0.005);
  CHECK(std::fabs(r.eps_quadratic - 2.2749) < 0.005);
  CHECK(std::fabs(r.eps_linear_sweep - 2.2224) < 0.005);
  CHECK(r.ratio > 1.0);
  CHECK(r.ratio < 1.05);
}

TEST_CASE("quadratic_epsilon_ratio extremes stay at or below the sweep") {
  for (double alpha : {0.0, 1.0}) {
    const QuadraticParams params{{5, 0.2, 1.1, 1.0}, alpha};
    const QuadraticRatio r = quadratic_epsilon_ratio(params, 1e-6);
    CHECK(r.ratio <= 1.0 + 1e-5);
  }
}

TEST_CASE("quadratic_epsilon_ratio applies rounding past the cap") {
  const QuadraticParams params{{13, 0.1, 1.2, 1.0}, 0.5};
  const QuadraticRatio r = quadratic_epsilon_ratio(params, 1e-6);
  CHECK(r.rounded);
  CHECK(r.eps_quadratic > 0.0);
}

TEST_CASE("zeroing_regularizer_epsilon") {
  CHECK(std::fabs(zeroing_regularizer_epsilon({3, 0.1, 1.0, 1.0}, 1e-6) -
                  2.182) <= 0.005);
  const SgdParams single{1, 0.25, 0.9, 1.0};
  CHECK(zeroing_regularizer_epsilon(single, 1e-6) ==
        doctest::Approx(heuristic_epsilon(single, 1e-6)));
  // A setting where wiping history leaks more than keeping it: one step at
  // small q and sigma is far more revealing than one hundred.
  const SgdParams params{100, 0.01, 0.5, 1.0};
  CHECK(zeroing_regularizer_epsilon(params, 1e-6) >
        heuristic_epsilon(params, 1e-6) + 1.0);
}

TEST_CASE("encode_canary_gradient") {
  const auto g0 = encode_canary_gradient(0, 3);
  CHECK(g0 == std::vector<double>{-1.0, 0.0, 0.0});
  const auto g2 = encode_canary_gradient(2, 3);
  CHECK(g2 == std::vector<double>{0.0, 0.0, -1.0});
  for (std::int64_t i = 0; i < 3; ++i) {
    const auto g = encode_canary_gradient(i, 3);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(encode_canary_gradient(3, 3), std::out_of_range);
}

TEST_CASE("encode_repeater_gradient with no history cancels the model") {
  EncoderConfig cfg;
  cfg.steps = 4;
  cfg.batch_repeaters = 1 << 17;
  const std::vector<double> model{0.5, -1.25, 2.0, 0.125};
  const auto grad = encode_repeater_gradient(model, 0, cfg);
  const double scale = 1.0 / (cfg.learning_rate * cfg.batch_repeaters);
  for (int j = 0; j < 4; ++j) {
    CHECK(grad[j] == doctest::Approx(model[j] * scale));
  }
}

TEST_CASE("encode_repeater_gradient decision branches, noiseless") {
  EncoderConfig cfg;
  cfg.steps = 2;
  cfg.noise_multiplier = 0.0;
  cfg.sampling_rate = 1.0 - 1e-12;  // canary effectively always sampled

  // Hand-simulated step 0 with the canary: model becomes (eta, 0).
  const std::vector<double> model{cfg.learning_rate, 0.0};
  const auto grad = encode_repeater_gradient(model, 1, cfg);
  const double scale = 1.0 / (cfg.learning_rate * cfg.batch_repeaters);
  // m_0 = eta >= t_last, so the repeater drives coordinate 0 to +big_val.
  CHECK(grad[0] ==
        doctest::Approx(-(cfg.big_val - model[0]) * scale).epsilon(1e-12));

  // Without the canary the decision goes the other way.
  const std::vector<double> empty{0.0, 0.0};
  const auto grad2 = encode_repeater_gradient(empty, 1, cfg);
  CHECK(grad2[0] == doctest::Approx(cfg.big_val * scale).epsilon(1e-12));
}

TEST_CASE("noiseless encoding run stores the sampling pattern exactly") {
  EncoderConfig cfg;
  cfg.steps = 16;
  cfg.noise_multiplier = 0.0;
  cfg.sampling_rate = 0.35;
  int checked_bits = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const EncoderTrace trace = encode_attack_run(cfg, true, seed, seed);
    const auto bits = decode_attack_bits(trace, cfg);
    for (std::int64_t j = 0; j < cfg.steps; ++j) {
      REQUIRE(bits[j] == trace.presence_bits[j]);
      ++checked_bits;
    }
  }
  CHECK(checked_bits == 16000);

  // Without the canary every settled coordinate ends at exactly -big_val.
  const EncoderTrace null_trace = encode_attack_run(cfg, false, 7, 0);
  for (std::int64_t j = 0; j + 1 < cfg.steps; ++j) {
    CHECK(null_trace.final_model[j] == doctest::Approx(-cfg.big_val));
  }
  const auto null_bits = decode_attack_bits(null_trace, cfg);
  for (std::int64_t j = 0; j < cfg.steps; ++j) CHECK(null_bits[j] == 0);
}

TEST_CASE("all-included pattern decodes under full sampling") {
  EncoderConfig cfg;
  cfg.steps = 5;
  cfg.noise_multiplier = 0.0;
  cfg.sampling_rate = 1.0 - 1e-12;
  const EncoderTrace trace = encode_attack_run(cfg, true, 3, 0);
  const auto bits = decode_attack_bits(trace, cfg);
  for (std::int64_t j = 0; j < cfg.steps; ++j) {
    CHECK(trace.presence_bits[j] == 1);
    CHECK(bits[j] == 1);
  }
}

TEST_CASE("undersized repeater batch trips the clipping check") {
  EncoderConfig cfg;
  cfg.steps = 8;
  cfg.batch_repeaters = 32;
  CHECK_THROWS_AS(encode_attack_run(cfg, true, 0, 0), ClippingError);
}

TEST_CASE("encoder config validation") {
  EncoderConfig cfg;
  cfg.t_past = cfg.big_val / 2.0;  // needs strict big_val > 2 t_past
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EncoderConfig{};
  cfg.t_last = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EncoderConfig{};
  cfg.sampling_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_NOTHROW(EncoderConfig{}.validate());
}

TEST_CASE("encoding runs are reproducible") {
  EncoderConfig cfg;
  cfg.steps = 8;
  cfg.noise_multiplier = 1.1;
  const EncoderTrace a = encode_attack_run(cfg, true, 99, 5);
  const EncoderTrace b = encode_attack_run(cfg, true, 99, 5);
  CHECK(a.final_model == b.final_model);
  CHECK(a.presence_bits == b.presence_bits);
  const EncoderTrace c = encode_attack_run(cfg, true, 99, 6);
  CHECK(a.final_model != c.final_model);
}

TEST_CASE("encoded bit rates follow the threshold channel") {
  // Each settled coordinate is the decision 1[A + N(0, sigma^2) >= t_last],
  // re-amplified losslessly afterwards; so the realized bit rates must match
  // the channel probabilities on both arms.
  EncoderConfig cfg;
  cfg.steps = 16;
  cfg.noise_multiplier = 1.4;
  cfg.sampling_rate = 0.3;
  const double p0 =
      log_gaussian_sf(cfg.t_last / cfg.noise_multiplier).probability();
  const double p1 =
      cfg.sampling_rate *
          log_gaussian_sf((cfg.t_last - 1.0) / cfg.noise_multiplier).probability() +
      (1.0 - cfg.sampling_rate) * p0;
  const int trials = 20000;
  std::int64_t with_ones = 0;
  std::int64_t without_ones = 0;
  bool amplified = true;
  for (int t = 0; t < trials; ++t) {
    const auto tr = static_cast<std::uint64_t>(t);
    const EncoderTrace with = encode_attack_run(cfg, true, 77, tr);
    const EncoderTrace without = encode_attack_run(cfg, false, 77, tr);
    const auto bits_with = decode_attack_bits(with, cfg);
    const auto bits_without = decode_attack_bits(without, cfg);
    for (std::int64_t j = 0; j + 1 < cfg.steps; ++j) {
      with_ones += bits_with[j];
      without_ones += bits_without[j];
      // Settled coordinates hold +-big_val plus one fresh noise only.
      if (std::fabs(std::fabs(with.final_model[j]) - cfg.big_val) >
          20.0 * cfg.noise_multiplier) {
        amplified = false;
      }
    }
  }
  const auto n = static_cast<double>(trials * (cfg.steps - 1));
  const double se1 = std::sqrt(p1 * (1.0 - p1) / n);
  const double se0 = std::sqrt(p0 * (1.0 - p0) / n);
  CHECK(std::fabs(with_ones / n - p1) < 4.0 * se1);
  CHECK(std::fabs(without_ones / n - p0) < 4.0 * se0);
  CHECK(amplified);
}

TEST_CASE("encoding score separates the arms") {
  EncoderConfig cfg;
  cfg.steps = 12;
  cfg.noise_multiplier = 0.8;
  cfg.sampling_rate = 0.3;
  double with_sum = 0.0;
  double without_sum = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    with_sum += encoding_attack_score(
        encode_attack_run(cfg, true, 11, static_cast<std::uint64_t>(t)), cfg);
    without_sum += encoding_attack_score(
        encode_attack_run(cfg, false, 11, static_cast<std::uint64_t>(t)), cfg);
  }
  CHECK(with_sum / trials > without_sum / trials + 0.05);
}

TEST_CASE("pathological run decodes exactly without noise") {
  const PathologicalConfig cfg{10, 0.4, 0.0, 50.0};
  const EncoderTrace trace = pathological_history_run(cfg, true, 21, 0);
  const auto decoded = decode_history(trace, cfg.amplification);
  for (std::int64_t i = 0; i < cfg.steps; ++i) {
    // Coordinate i holds the bit of step T-1-i.
    CHECK(decoded[i] ==
          doctest::Approx(trace.presence_bits[cfg.steps - 1 - i]).epsilon(1e-9));
  }
}

TEST_CASE("pathological decoding error matches the geometric variance") {
  const PathologicalConfig cfg{8, 0.5, 0.8, 100.0};
  const int trials = 10000;
  std::vector<double> sum(cfg.steps, 0.0);
  std::vector<double> sumsq(cfg.steps, 0.0);
  for (int t = 0; t < trials; ++t) {
    const EncoderTrace trace =
        pathological_history_run(cfg, true, 123, static_cast<std::uint64_t>(t));
    const auto decoded = decode_history(trace, cfg.amplification);
    for (std::int64_t i = 0; i < cfg.steps; ++i) {
      const double err = decoded[i] - trace.presence_bits[cfg.steps - 1 - i];
      sum[i] += err;
      sumsq[i] += err * err;
    }
  }
  const double v2 = 1.0 / (cfg.amplification * cfg.amplification);
  const double s2 = cfg.noise_multiplier * cfg.noise_multiplier;
  for (std::int64_t i = 0; i < cfg.steps; ++i) {
    const double mean = sum[i] / trials;
    const double var = sumsq[i] / trials - mean * mean;
    const double predicted = s2 * (1.0 - std::pow(v2, i + 1)) / (1.0 - v2);
    // Sample variance has relative standard error ~ sqrt(2/n).
    const double tolerance = 5.0 * predicted * std::sqrt(2.0 / (trials - 1.0));
    CHECK(std::fabs(var - predicted) < tolerance);
    CHECK(std::fabs(mean) < 5.0 * std::sqrt(predicted / trials));
  }
  // The freshest coordinate's variance is exactly sigma^2; deeper ones
  // approach sigma^2 / (1 - v^-2), i.e. sigma^2 as v grows.
  CHECK(s2 * (1.0 - std::pow(v2, 1)) / (1.0 - v2) == doctest::Approx(s2));
}
