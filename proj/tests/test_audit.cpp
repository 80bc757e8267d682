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
#include <sstream>

#include <doctest.h>

#include "lastiter/audit.hpp"

using namespace lastiter;

TEST_CASE("simulator moments match the mixture law") {
  const SgdParams params{100, 0.1, 1.0, 1.0};
  const LastIterateScoreSimulator sim(params);
  const int n = 100000;
  double sum_with = 0.0, sumsq_with = 0.0, sum_without = 0.0, sumsq_without = 0.0;
  for (int t = 0; t < n; ++t) {
    CounterRng rng_with(31, 1, static_cast<std::uint64_t>(t));
    CounterRng rng_without(31, 0, static_cast<std::uint64_t>(t));
    const double w = sim.sample(true, rng_with);
    const double o = sim.sample(false, rng_without);
    sum_with += w;
    sumsq_with += w * w;
    sum_without += o;
    sumsq_without += o * o;
  }
  const double tq = 100 * 0.1;
  const double var_with = tq * 0.9 + 100.0;  // Tq(1-q) + T sigma^2
  const double mean_w = sum_with / n;
  const double v_w = sumsq_with / n - mean_w * mean_w;
  CHECK(std::fabs(mean_w - tq) < 3.0 * std::sqrt(var_with / n));
  CHECK(std::fabs(v_w - var_with) < 3.0 * var_with * std::sqrt(2.0 / n));
  const double mean_o = sum_without / n;
  const double v_o = sumsq_without / n - mean_o * mean_o;
  CHECK(std::fabs(mean_o) < 3.0 * std::sqrt(100.0 / n));
  CHECK(std::fabs(v_o - 100.0) < 3.0 * 100.0 * std::sqrt(2.0 / n));
}

TEST_CASE("simulator reduces to a binomial draw as noise vanishes") {
  const SgdParams params{50, 0.2, 1e-9, 1.0};
  double total = 0.0;
  for (int t = 0; t < 2000; ++t) {
    CounterRng rng(5, 1, static_cast<std::uint64_t>(t));
    const double score = simulate_last_iterate_score(params, true, rng);
    CHECK(std::fabs(score - std::round(score)) < 1e-5);
    total += score;
  }
  CHECK(std::fabs(total / 2000.0 - 10.0) < 0.5);  // mean Tq = 10
}

TEST_CASE("epsilon_lower_bound corner cases") {
  // No true positives: the TPR side is hopeless and the TNR side has
  // fnr_ub = 1, so the bound collapses to zero.
  CHECK(epsilon_lower_bound(0, 10, 1000, 1000, 1e-6, 0.05) == 0.0);
  // Indistinguishable arms.
  CHECK(epsilon_lower_bound(500, 500, 1000, 1000, 1e-6, 0.05) == 0.0);
  // Perfect separation: finite, limited by the sample size.
  const double perfect = epsilon_lower_bound(1000, 0, 1000, 1000, 1e-6, 0.05);
  CHECK(perfect > 0.0);
  CHECK(perfect < std::log(1000.0 / 3.0));
  const double bigger = epsilon_lower_bound(10000, 0, 10000, 10000, 1e-6, 0.05);
  CHECK(bigger > perfect);
  // Consistency with the underlying one-sided bounds.
  const double tpr_lb = clopper_pearson(900, 1000, 0.975, BoundSide::kLower);
  const double fpr_ub = clopper_pearson(100, 1000, 0.975, BoundSide::kUpper);
  const double expected = std::log((tpr_lb - 1e-6) / fpr_ub);
  CHECK(epsilon_lower_bound(900, 100, 1000, 1000, 1e-6, 0.05) ==
        doctest::Approx(expected));
  CHECK_THROWS_AS(epsilon_lower_bound(11, 0, 10, 10, 1e-6, 0.05),
                  std::invalid_argument);
}

TEST_CASE("audit config validation") {
  AuditConfig cfg;
  cfg.trials_per_arm = 50;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AuditConfig{};
  cfg.calibration_fraction = 0.9999;
  cfg.trials_per_arm = 200;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AuditConfig{};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("identical arms certify nothing") {
  AuditConfig cfg;
  cfg.trials_per_arm = 2000;
  cfg.seed = 17;
  const AuditResult result = run_audit(LinearAdversarial{{10, 0.0, 1.0, 1.0}}, cfg);
  CHECK(result.eps_lower == 0.0);
}

TEST_CASE("audit bound is sound against the exact epsilon") {
  // The certified lower bound must stay below the exact last-iterate epsilon;
  // with the conservative rate bounds this holds on every one of the seeds.
  const SgdParams params{10, 0.1, 1.0, 1.0};
  const double exact = heuristic_epsilon(params, 1e-6);
  AuditConfig cfg;
  cfg.trials_per_arm = 5000;
  int sound = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const AuditResult result = run_audit(LinearAdversarial{params}, cfg);
    if (result.eps_lower <= exact) ++sound;
  }
  CHECK(sound >= 19);
}

TEST_CASE("audit is deterministic and thread-count independent") {
  const SgdParams params{50, 0.05, 1.0, 1.0};
  AuditConfig cfg;
  cfg.trials_per_arm = 4000;
  cfg.seed = 99;
  const AuditResult serial = run_audit(LinearAdversarial{params}, cfg, 1);
  const AuditResult parallel = run_audit(LinearAdversarial{params}, cfg, 7);
  CHECK(serial.threshold == parallel.threshold);
  CHECK(serial.eps_lower == parallel.eps_lower);
  CHECK(serial.counts.true_positives == parallel.counts.true_positives);
  CHECK(serial.counts.false_positives == parallel.counts.false_positives);
  const AuditResult again = run_audit(LinearAdversarial{params}, cfg, 3);
  CHECK(again.eps_lower == serial.eps_lower);
}

TEST_CASE("certified counts come from the held-out split only") {
  const SgdParams params{20, 0.2, 1.0, 1.0};
  AuditConfig cfg;
  cfg.trials_per_arm = 3000;
  cfg.calibration_fraction = 0.4;
  cfg.seed = 7;
  std::vector<double> with;
  std::vector<double> without;
  const AuditResult result =
      run_audit(LinearAdversarial{params}, cfg, 0, &with, &without);
  REQUIRE(with.size() == 3000);
  REQUIRE(without.size() == 3000);
  const std::int64_t n_cal = 1200;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t t = n_cal; t < with.size(); ++t) {
    tp += with[t] >= result.threshold ? 1 : 0;
    fp += without[t] >= result.threshold ? 1 : 0;
  }
  CHECK(result.counts.positives_total == 3000 - n_cal);
  CHECK(result.counts.true_positives == tp);
  CHECK(result.counts.false_positives == fp);
  CHECK(result.eps_lower ==
        doctest::Approx(epsilon_lower_bound(tp, fp, 3000 - n_cal, 3000 - n_cal,
                                            cfg.delta_target, cfg.confidence)));
}

TEST_CASE("a separated pair certifies a positive epsilon") {
  const SgdParams params{4, 0.5, 0.4, 1.0};
  AuditConfig cfg;
  cfg.trials_per_arm = 20000;
  cfg.seed = 3;
  const AuditResult result = run_audit(LinearAdversarial{params}, cfg);
  CHECK(result.eps_lower > 0.5);
  CHECK(result.eps_lower <= heuristic_epsilon(params, 1e-6));
}

TEST_CASE("encoding scenario runs end to end") {
  EncoderConfig enc;
  enc.steps = 8;
  enc.sampling_rate = 0.3;
  enc.noise_multiplier = 0.6;
  AuditConfig cfg;
  cfg.trials_per_arm = 4000;
  cfg.seed = 12;
  const AuditResult result = run_audit(EncodingAttack{enc}, cfg);
  CHECK(result.eps_lower >= 0.0);
  CHECK(result.counts.positives_total == 2000);
  // Same seed reproduces bit-identically across thread counts.
  const AuditResult again = run_audit(EncodingAttack{enc}, cfg, 2);
  CHECK(again.eps_lower == result.eps_lower);
  CHECK(again.threshold == result.threshold);
}

TEST_CASE("score CSV layout") {
  std::ostringstream out;
  const std::vector<double> with{1.5, 2.5};
  const std::vector<double> without{-0.5};
  write_scores_csv(out, with, without);
  CHECK(out.str() ==
        "arm,trial,score\nwithout,0,-0.5\nwith,0,1.5\nwith,1,2.5\n");
}
