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
// Monte Carlo privacy auditing: run a membership game many times per arm,
// pick a score threshold on a calibration split, and certify an epsilon lower
// bound from Clopper-Pearson bounds on the held-out true/false positive
// rates. The certified bound only ever touches held-out counts.

#ifndef LASTITER_AUDIT_HPP_
#define LASTITER_AUDIT_HPP_

#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

#include "lastiter/counterexamples.hpp"
#include "lastiter/mixture.hpp"
#include "lastiter/rng.hpp"

namespace lastiter {

struct AuditConfig {
  std::int64_t trials_per_arm = 100000;
  double confidence = 0.05;  // total error budget across both CP bounds
  double delta_target = 1e-6;
  double calibration_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AuditCounts {
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  std::int64_t positives_total = 0;
  std::int64_t negatives_total = 0;
};

struct AuditResult {
  double threshold = 0.0;
  double tpr_bound = 0.0;  // CP lower bound on the true positive rate
  double fpr_bound = 1.0;  // CP upper bound on the false positive rate
  double eps_lower = 0.0;
  AuditCounts counts;  // held-out counts only
};

// Samples the sufficient statistic of the linear adversarial game in one
// draw per arm: Binomial(T, q) canary hits plus N(0, T sigma^2) noise when
// the canary is present, the noise alone otherwise.
double simulate_last_iterate_score(const SgdParams& params, bool with_canary,
                                   CounterRng& rng);

// Caches the binomial inverse-CDF table so batch simulation stays O(log T)
// per trial.
class LastIterateScoreSimulator {
 public:
  explicit LastIterateScoreSimulator(const SgdParams& params);
  double sample(bool with_canary, CounterRng& rng) const;

 private:
  SgdParams params_;
  double total_stddev_;
  std::vector<double> binomial_cdf_;
};

// Certified lower bound from counts: with coverage 1 - confidence/2 per
// one-sided bound,
//   eps = max( ln((tpr_lb - delta)/fpr_ub), ln((tnr_lb - delta)/fnr_ub), 0 ).
// The TNR/FNR direction reuses the same two bound events, so the total error
// budget stays `confidence`.
double epsilon_lower_bound(std::int64_t true_positives,
                           std::int64_t false_positives,
                           std::int64_t positives_total,
                           std::int64_t negatives_total, double delta,
                           double confidence);

struct LinearAdversarial {
  SgdParams params;
};
struct EncodingAttack {
  EncoderConfig config;
};
using AuditScenario = std::variant<LinearAdversarial, EncodingAttack>;

// Draws trials_per_arm scores per arm (fanning trials out over `threads`
// workers; 0 picks the hardware count), selects the threshold on the
// calibration split by maximizing a Wilson-penalized estimate, then computes
// the certified bound on the held-out split. Deterministic in (config, seed)
// regardless of the worker count. Score vectors are exported through the
// optional out-pointers (ordered by trial index).
AuditResult run_audit(const AuditScenario& scenario, const AuditConfig& config,
                      int threads = 0,
                      std::vector<double>* with_scores = nullptr,
                      std::vector<double>* without_scores = nullptr);

// CSV dump of per-trial scores: columns arm,trial,score.
void write_scores_csv(std::ostream& out, std::span<const double> with_scores,
                      std::span<const double> without_scores);

}  // namespace lastiter

#endif  // LASTITER_AUDIT_HPP_
