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

#ifndef LASTITER_NUMERICS_HPP_
#define LASTITER_NUMERICS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace lastiter {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Thrown when a root search is asked to invert a target that the supplied
// interval does not enclose, or when an expanding search fails to enclose it.
struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A natural-log probability. Valid values are <= 0, with -inf representing
// probability zero. Values that land a rounding error above zero are clamped.
class LogProb {
 public:
  LogProb() : value_(kNegInf) {}
  explicit LogProb(double log_value) : value_(log_value) {
    if (std::isnan(value_)) throw std::domain_error("LogProb: NaN");
    if (value_ > 0.0) {
      if (value_ > 1e-9) throw std::domain_error("LogProb: log-probability > 0");
      value_ = 0.0;
    }
  }
  double log() const { return value_; }
  double probability() const { return std::exp(value_); }
  bool is_zero() const { return value_ == kNegInf; }

 private:
  double value_;
};

// Search interval for invert_monotone. Requires lo < hi.
struct Bracket {
  double lo;
  double hi;
};

// ln[ C(T,k) q^k (1-q)^(T-k) ], the Binomial(T,q) mass at k. Evaluated through
// a high-accuracy log-factorial (exact prefix table, then Stirling) so that
// the exponentiated masses sum to 1 well below 1e-12 even at T = 10^4.
LogProb log_binom_pmf(std::int64_t trials, std::int64_t k, double q);

// ln Pr[N(0,1) >= z]. Uses erfc up to z = 8 and the scaled-complementary
// asymptotic expansion beyond, so the extreme tail keeps ~1e-13 relative
// accuracy instead of degrading through 1 - CDF cancellation.
LogProb log_gaussian_sf(double z);

// ln sum_i exp(terms[i]) with the max-shift trick. Empty input is an error;
// an all -inf list yields -inf.
double logsumexp(std::span<const double> terms);

// Bisection solve of f(y) = target for monotone f (either direction) on the
// given bracket. Stops once the bracket width is <= tol * max(1,|lo|,|hi|),
// with a hard cap of 200 iterations. Throws BracketError when the bracket
// does not enclose the target.
template <class F>
double invert_monotone(F&& f, double target, Bracket bracket, double tol) {
  double lo = bracket.lo;
  double hi = bracket.hi;
  if (!(lo < hi)) throw BracketError("invert_monotone: lo >= hi");
  double flo = f(lo);
  double fhi = f(hi);
  const bool increasing = flo <= fhi;
  if (increasing ? (target < flo || target > fhi)
                 : (target > flo || target < fhi)) {
    throw BracketError("invert_monotone: target not enclosed by bracket");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double width_limit =
        tol * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    if (hi - lo <= width_limit) break;
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (increasing ? (fmid < target) : (fmid > target)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation. Needed for the exact binomial confidence bounds.
double regularized_incomplete_beta(double a, double b, double x);

enum class BoundSide { kLower, kUpper };

// Exact one-sided Clopper-Pearson binomial confidence bound at the given
// one-sided coverage level, via the Beta-quantile equivalence. The quantile
// is solved by bisection on I_x(a,b) to 1e-10.
double clopper_pearson(std::int64_t successes, std::int64_t trials,
                       double confidence, BoundSide side);

}  // namespace lastiter

#endif  // LASTITER_NUMERICS_HPP_
