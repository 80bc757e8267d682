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

#include "lastiter/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

namespace lastiter {
namespace {

double standard_normal_quantile(double p) {
  // Upper-tail inversion of the survival function; plenty for the Wilson z.
  return invert_monotone(
      [](double z) { return -log_gaussian_sf(z).log(); }, -std::log(p),
      Bracket{-40.0, 40.0}, 1e-12);
}

// Wilson score bounds: cheap, monotone stand-ins for the exact CP bounds,
// used only to rank candidate thresholds during calibration. The certified
// numbers always come from the exact bounds on held-out data.
double wilson_lower(double k, double n, double z) {
  const double z2 = z * z;
  const double phat = k / n;
  const double centre = k + z2 / 2.0;
  const double spread = z * std::sqrt(k * (1.0 - phat) + z2 / 4.0);
  return std::max(0.0, (centre - spread) / (n + z2));
}

double wilson_upper(double k, double n, double z) {
  const double z2 = z * z;
  const double phat = k / n;
  const double centre = k + z2 / 2.0;
  const double spread = z * std::sqrt(k * (1.0 - phat) + z2 / 4.0);
  return std::min(1.0, (centre + spread) / (n + z2));
}

double rate_pair_epsilon(double tpr_lb, double fpr_ub, double delta) {
  double best = 0.0;
  if (tpr_lb > delta && fpr_ub > 0.0) {
    best = std::max(best, std::log((tpr_lb - delta) / fpr_ub));
  }
  const double tnr_lb = 1.0 - fpr_ub;
  const double fnr_ub = 1.0 - tpr_lb;
  if (tnr_lb > delta && fnr_ub > 0.0) {
    best = std::max(best, std::log((tnr_lb - delta) / fnr_ub));
  }
  return best;
}

void parallel_trials(std::int64_t n, int threads,
                     const std::function<void(std::int64_t, std::int64_t)>& run_range) {
  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, 64);
  if (workers == 1 || n < 1024) {
    run_range(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&run_range, begin, end] { run_range(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void AuditConfig::validate() const {
  if (trials_per_arm < 100) {
    throw std::invalid_argument("AuditConfig: trials_per_arm must be >= 100");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("AuditConfig: confidence outside (0, 1)");
  }
  if (!(delta_target >= 0.0 && delta_target < 1.0)) {
    throw std::invalid_argument("AuditConfig: delta_target outside [0, 1)");
  }
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw std::invalid_argument("AuditConfig: calibration_fraction outside (0, 1)");
  }
  const std::int64_t estimation =
      trials_per_arm - static_cast<std::int64_t>(
                           std::llround(calibration_fraction * trials_per_arm));
  if (estimation < 50) {
    throw std::invalid_argument(
        "AuditConfig: fewer than 50 estimation samples per arm");
  }
}

LastIterateScoreSimulator::LastIterateScoreSimulator(const SgdParams& params)
    : params_(params) {
  params_.validate();
  total_stddev_ = params_.noise_multiplier *
                  std::sqrt(static_cast<double>(params_.steps));
  binomial_cdf_.resize(params_.steps + 1);
  double acc = 0.0;
  for (std::int64_t k = 0; k <= params_.steps; ++k) {
    acc += log_binom_pmf(params_.steps, k, params_.sampling_rate).probability();
    binomial_cdf_[k] = acc;
  }
  binomial_cdf_.back() = 1.0;
}

double LastIterateScoreSimulator::sample(bool with_canary,
                                         CounterRng& rng) const {
  // Draw slots are fixed (coin first, then noise) so both arms consume the
  // stream identically.
  const double coin = rng.uniform();
  const double noise = total_stddev_ * rng.normal();
  if (!with_canary) return noise;
  const auto it =
      std::upper_bound(binomial_cdf_.begin(), binomial_cdf_.end() - 1, coin);
  const auto hits = static_cast<double>(it - binomial_cdf_.begin());
  return hits + noise;
}

double simulate_last_iterate_score(const SgdParams& params, bool with_canary,
                                   CounterRng& rng) {
  return LastIterateScoreSimulator(params).sample(with_canary, rng);
}

double epsilon_lower_bound(std::int64_t true_positives,
                           std::int64_t false_positives,
                           std::int64_t positives_total,
                           std::int64_t negatives_total, double delta,
                           double confidence) {
  if (true_positives < 0 || true_positives > positives_total ||
      false_positives < 0 || false_positives > negatives_total) {
    throw std::invalid_argument("epsilon_lower_bound: inconsistent counts");
  }
  const double coverage = 1.0 - confidence / 2.0;
  const double tpr_lb = clopper_pearson(true_positives, positives_total,
                                        coverage, BoundSide::kLower);
  const double fpr_ub = clopper_pearson(false_positives, negatives_total,
                                        coverage, BoundSide::kUpper);
  return rate_pair_epsilon(tpr_lb, fpr_ub, delta);
}

AuditResult run_audit(const AuditScenario& scenario, const AuditConfig& config,
                      int threads, std::vector<double>* with_scores,
                      std::vector<double>* without_scores) {
  config.validate();
  const std::int64_t n = config.trials_per_arm;
  std::vector<double> with(n);
  std::vector<double> without(n);

  if (const auto* linear = std::get_if<LinearAdversarial>(&scenario)) {
    const LastIterateScoreSimulator simulator(linear->params);
    parallel_trials(n, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t t = begin; t < end; ++t) {
        CounterRng rng_with(config.seed, 1, static_cast<std::uint64_t>(t));
        CounterRng rng_without(config.seed, 0, static_cast<std::uint64_t>(t));
        with[t] = simulator.sample(true, rng_with);
        without[t] = simulator.sample(false, rng_without);
      }
    });
  } else {
    const EncoderConfig& enc = std::get<EncodingAttack>(scenario).config;
    enc.validate();
    if (!(enc.noise_multiplier > 0.0)) {
      throw std::invalid_argument("run_audit: encoding scenario needs noise > 0");
    }
    parallel_trials(n, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t t = begin; t < end; ++t) {
        const auto trial = static_cast<std::uint64_t>(t);
        with[t] = encoding_attack_score(encode_attack_run(enc, true, config.seed, trial), enc);
        without[t] = encoding_attack_score(encode_attack_run(enc, false, config.seed, trial), enc);
      }
    });
  }

  // Calibration/estimation split by trial index; the sets are disjoint.
  const auto n_cal = static_cast<std::int64_t>(
      std::llround(config.calibration_fraction * n));
  std::vector<double> cal_pos(with.begin(), with.begin() + n_cal);
  std::vector<double> cal_neg(without.begin(), without.begin() + n_cal);
  std::sort(cal_pos.begin(), cal_pos.end());
  std::sort(cal_neg.begin(), cal_neg.end());

  // Candidate thresholds: midpoints between consecutive distinct pooled
  // calibration scores, scanned in increasing order so ties resolve to the
  // smaller threshold.
  std::vector<double> pooled;
  pooled.reserve(2 * n_cal);
  std::merge(cal_pos.begin(), cal_pos.end(), cal_neg.begin(), cal_neg.end(),
             std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  const double z = standard_normal_quantile(config.confidence / 2.0);
  const auto n_cal_d = static_cast<double>(n_cal);
  double best_value = -1.0;
  double best_threshold = pooled.empty() ? 0.0 : pooled.front();
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    const double threshold = 0.5 * (pooled[i] + pooled[i + 1]);
    const auto tp = static_cast<double>(
        cal_pos.end() - std::lower_bound(cal_pos.begin(), cal_pos.end(), threshold));
    const auto fp = static_cast<double>(
        cal_neg.end() - std::lower_bound(cal_neg.begin(), cal_neg.end(), threshold));
    const double value =
        rate_pair_epsilon(wilson_lower(tp, n_cal_d, z),
                          wilson_upper(fp, n_cal_d, z), config.delta_target);
    if (value > best_value) {
      best_value = value;
      best_threshold = threshold;
    }
  }

  AuditResult result;
  result.threshold = best_threshold;
  result.counts.positives_total = n - n_cal;
  result.counts.negatives_total = n - n_cal;
  for (std::int64_t t = n_cal; t < n; ++t) {
    result.counts.true_positives += with[t] >= best_threshold ? 1 : 0;
    result.counts.false_positives += without[t] >= best_threshold ? 1 : 0;
  }
  const double coverage = 1.0 - config.confidence / 2.0;
  result.tpr_bound = clopper_pearson(result.counts.true_positives,
                                     result.counts.positives_total, coverage,
                                     BoundSide::kLower);
  result.fpr_bound = clopper_pearson(result.counts.false_positives,
                                     result.counts.negatives_total, coverage,
                                     BoundSide::kUpper);
  result.eps_lower =
      rate_pair_epsilon(result.tpr_bound, result.fpr_bound, config.delta_target);

  if (with_scores) *with_scores = std::move(with);
  if (without_scores) *without_scores = std::move(without);
  return result;
}

void write_scores_csv(std::ostream& out, std::span<const double> with_scores,
                      std::span<const double> without_scores) {
  out << "arm,trial,score\n";
  char buf[64];
  for (std::size_t t = 0; t < without_scores.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "without,%zu,%.17g\n", t, without_scores[t]);
    out << buf;
  }
  for (std::size_t t = 0; t < with_scores.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "with,%zu,%.17g\n", t, with_scores[t]);
    out << buf;
  }
}

}  // namespace lastiter
