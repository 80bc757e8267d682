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
// Command line front end: point queries, baseline sweeps, the quadratic
// ratio pipeline, the encoding-attack simulator, and Monte Carlo audits.
// Exit codes: 0 success, 2 usage error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lastiter/audit.hpp"
#include "lastiter/baselines.hpp"
#include "lastiter/counterexamples.hpp"
#include "lastiter/mixture.hpp"

namespace {

using nlohmann::json;
using namespace lastiter;

constexpr int kSchemaVersion = 1;

int g_sigfigs = 6;

// Round to the configured number of significant digits so repeated runs emit
// byte-identical text.
double rounded(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", g_sigfigs, x);
  return std::strtod(buf, nullptr);
}

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", g_sigfigs, x);
  return buf;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::invalid_argument("cannot open output file: " + path);
  return file;
}

void emit_flat(std::ostream& out, const std::string& format,
               const std::vector<std::pair<std::string, json>>& fields) {
  if (format == "json") {
    json obj;
    obj["schema_version"] = kSchemaVersion;
    for (const auto& [key, value] : fields) obj[key] = value;
    out << obj.dump() << "\n";
    return;
  }
  // Single-row CSV.
  std::string header = "schema_version";
  std::string row = std::to_string(kSchemaVersion);
  for (const auto& [key, value] : fields) {
    header += "," + key;
    row += ",";
    if (value.is_number_float()) {
      row += fmt(value.get<double>());
    } else if (value.is_string()) {
      row += value.get<std::string>();
    } else {
      row += value.dump();
    }
  }
  out << header << "\n" << row << "\n";
}

double fullbatch_epsilon(const SgdParams& params, double delta) {
  if (params.sampling_rate == 0.0) return 0.0;
  return gaussian_mechanism_epsilon(gdp_mu(fullbatch_rescale(params)), delta);
}

struct CommonFlags {
  std::int64_t t = 1;
  double q = 0.1;
  double sigma = 1.0;
  double delta = 1e-6;
  double eta = 1.0;
  std::string out;
  std::string format;
};

void add_output_flags(CLI::App* cmd, CommonFlags& flags,
                      const std::string& default_format) {
  cmd->add_option("--out", flags.out, "Output file (default: stdout)");
  cmd->add_option("--format", flags.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val(default_format);
}

std::vector<std::int64_t> step_grid(std::int64_t t_min, std::int64_t t_max,
                                    int count) {
  std::vector<std::int64_t> grid;
  if (t_min < 1 || t_max < t_min || count < 1) {
    throw std::invalid_argument("bad step grid");
  }
  if (count == 1) return {t_min};
  const double ratio = std::pow(static_cast<double>(t_max) / t_min,
                                1.0 / (count - 1));
  double v = static_cast<double>(t_min);
  for (int i = 0; i < count; ++i) {
    const auto t = static_cast<std::int64_t>(std::llround(v));
    if (grid.empty() || t > grid.back()) grid.push_back(t);
    v *= ratio;
  }
  if (grid.back() != t_max) grid.push_back(t_max);
  return grid;
}

int cmd_epsilon(const CommonFlags& flags) {
  const SgdParams params{flags.t, flags.q, flags.sigma, flags.eta};
  params.validate();
  const double heuristic = heuristic_epsilon(params, flags.delta);
  const double standard = standard_epsilon(params, flags.delta);
  const double fullbatch = fullbatch_epsilon(params, flags.delta);
  const SweepResult sweep = heuristic_sweep_max(params, flags.delta);
  std::ofstream file;
  std::ostream& out = open_output(flags.out, file);
  emit_flat(out, flags.format,
            {{"t", flags.t},
             {"q", rounded(flags.q)},
             {"sigma", rounded(flags.sigma)},
             {"delta", rounded(flags.delta)},
             {"eps_heuristic", rounded(heuristic)},
             {"eps_standard_ub", rounded(standard)},
             {"eps_fullbatch", rounded(fullbatch)},
             {"eps_sweep_max", rounded(sweep.epsilon)},
             {"sweep_argmax_t", sweep.argmax_steps}});
  return 0;
}

int cmd_delta(const CommonFlags& flags, double epsilon) {
  const SgdParams params{flags.t, flags.q, flags.sigma, flags.eta};
  params.validate();
  const ShiftMixture mix = binomial_gaussian_pair(params);
  const double d_pq = hockey_stick_pq(mix, epsilon);
  const double d_qp = hockey_stick_qp(mix, epsilon);
  const double fullbatch =
      flags.q == 0.0 ? 0.0
                     : gaussian_mechanism_delta(
                           gdp_mu(fullbatch_rescale(params)), epsilon);
  std::ofstream file;
  std::ostream& out = open_output(flags.out, file);
  emit_flat(out, flags.format,
            {{"t", flags.t},
             {"q", rounded(flags.q)},
             {"sigma", rounded(flags.sigma)},
             {"epsilon", rounded(epsilon)},
             {"delta_heuristic", rounded(std::max(d_pq, d_qp))},
             {"delta_pq", rounded(d_pq)},
             {"delta_qp", rounded(d_qp)},
             {"delta_fullbatch", rounded(fullbatch)}});
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& regime,
              std::int64_t t_min, std::int64_t t_max, int t_count,
              double target_eps) {
  std::ofstream file;
  std::ostream& out = open_output(flags.out, file);
  out << "t,q_effective,sigma_effective,eps_heuristic,eps_standard_ub,"
         "eps_fullbatch,eps_sweep_max\n";
  for (std::int64_t t : step_grid(t_min, t_max, t_count)) {
    double q_eff = flags.q;
    double sigma_eff = flags.sigma;
    if (regime == "a") {
      // Anchor (t, q, sigma) at the --t flag; hold T*q and T*sigma^2 fixed.
      const double anchor = static_cast<double>(flags.t);
      q_eff = flags.q * anchor / static_cast<double>(t);
      sigma_eff = flags.sigma * std::sqrt(anchor / static_cast<double>(t));
      if (q_eff > 1.0) {
        throw std::invalid_argument("sweep regime a: T*q exceeds 1 at small T");
      }
    } else if (regime == "b") {
      sigma_eff = sigma_for_standard_epsilon(t, flags.q, target_eps, flags.delta);
    }
    const SgdParams params{t, q_eff, sigma_eff, flags.eta};
    const double heuristic = heuristic_epsilon(params, flags.delta);
    const double standard = standard_epsilon(params, flags.delta);
    const double fullbatch = fullbatch_epsilon(params, flags.delta);
    const SweepResult sweep = heuristic_sweep_max(params, flags.delta);
    out << t << "," << fmt(q_eff) << "," << fmt(sigma_eff) << ","
        << fmt(heuristic) << "," << fmt(standard) << "," << fmt(fullbatch)
        << "," << fmt(sweep.epsilon) << "\n";
  }
  return 0;
}

int cmd_quadratic(const CommonFlags& flags, std::int64_t t_min,
                  std::int64_t t_max, const std::vector<double>& q_list,
                  double alpha, double target_eps) {
  std::ofstream file;
  std::ostream& out = open_output(flags.out, file);
  out << "t,q,sigma,alpha,eps_quadratic,eps_linear_sweep,ratio,rounded\n";
  for (double q : q_list) {
    const double sigma = sigma_for_standard_epsilon(1, q, target_eps, flags.delta);
    for (std::int64_t t = t_min; t <= t_max; ++t) {
      const QuadraticParams params{{t, q, sigma, flags.eta}, alpha};
      const QuadraticRatio r = quadratic_epsilon_ratio(params, flags.delta);
      out << t << "," << fmt(q) << "," << fmt(sigma) << "," << fmt(alpha)
          << "," << fmt(r.eps_quadratic) << "," << fmt(r.eps_linear_sweep)
          << "," << fmt(r.ratio) << "," << (r.rounded ? 1 : 0) << "\n";
    }
  }
  return 0;
}

int cmd_encode_attack(const CommonFlags& flags, EncoderConfig enc,
                      std::int64_t trials, std::uint64_t seed, bool analytic,
                      double amplification) {
  enc.steps = flags.t;
  enc.sampling_rate = flags.q;
  enc.noise_multiplier = flags.sigma;
  enc.learning_rate = flags.eta;
  std::ofstream file;
  std::ostream& out = open_output(flags.out, file);

  if (analytic) {
    const PathologicalConfig cfg{flags.t, flags.q, flags.sigma, amplification};
    // Decoded coordinate i estimates the inclusion bit of step T-1-i; report
    // its error moments against the predicted variance.
    std::vector<double> sum(flags.t, 0.0), sumsq(flags.t, 0.0);
    for (std::int64_t trial = 0; trial < trials; ++trial) {
      const EncoderTrace trace = pathological_history_run(
          cfg, true, seed, static_cast<std::uint64_t>(trial));
      const std::vector<double> decoded = decode_history(trace, amplification);
      for (std::int64_t i = 0; i < flags.t; ++i) {
        const double err =
            decoded[i] - trace.presence_bits[flags.t - 1 - i];
        sum[i] += err;
        sumsq[i] += err * err;
      }
    }
    json coords = json::array();
    const double v2 = 1.0 / (amplification * amplification);
    for (std::int64_t i = 0; i < flags.t; ++i) {
      const double mean = sum[i] / trials;
      const double var = sumsq[i] / trials - mean * mean;
      const double predicted = flags.sigma * flags.sigma *
                               (1.0 - std::pow(v2, i + 1)) / (1.0 - v2);
      coords.push_back({{"coordinate", i},
                        {"error_mean", rounded(mean)},
                        {"error_variance", rounded(var)},
                        {"predicted_variance", rounded(predicted)}});
    }
    json obj{{"schema_version", kSchemaVersion},
             {"mode", "analytic"},
             {"t", flags.t},
             {"q", rounded(flags.q)},
             {"sigma", rounded(flags.sigma)},
             {"amplification", rounded(amplification)},
             {"trials", trials},
             {"seed", seed},
             {"coordinates", coords}};
    out << obj.dump() << "\n";
    return 0;
  }

  enc.validate();
  std::int64_t bit_errors = 0;
  std::int64_t bits_total = 0;
  std::int64_t false_bits = 0;
  std::int64_t null_bits_total = 0;
  double score_with = 0.0;
  double score_without = 0.0;
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    const auto tr = static_cast<std::uint64_t>(trial);
    const EncoderTrace with = encode_attack_run(enc, true, seed, tr);
    const EncoderTrace without = encode_attack_run(enc, false, seed, tr);
    const auto bits_with = decode_attack_bits(with, enc);
    const auto bits_without = decode_attack_bits(without, enc);
    for (std::int64_t i = 0; i < enc.steps; ++i) {
      bit_errors += bits_with[i] != with.presence_bits[i] ? 1 : 0;
      ++bits_total;
      false_bits += bits_without[i] ? 1 : 0;
      ++null_bits_total;
    }
    if (enc.noise_multiplier > 0.0) {
      score_with += encoding_attack_score(with, enc);
      score_without += encoding_attack_score(without, enc);
    }
  }
  emit_flat(out, flags.format,
            {{"mode", "simulate"},
             {"t", flags.t},
             {"q", rounded(flags.q)},
             {"sigma", rounded(flags.sigma)},
             {"trials", trials},
             {"seed", seed},
             {"bit_accuracy", rounded(1.0 - static_cast<double>(bit_errors) /
                                                static_cast<double>(bits_total))},
             {"bit_false_positive_rate",
              rounded(static_cast<double>(false_bits) /
                      static_cast<double>(null_bits_total))},
             {"mean_score_with", rounded(score_with / trials)},
             {"mean_score_without", rounded(score_without / trials)}});
  return 0;
}

int cmd_audit(const CommonFlags& flags, const std::string& scenario,
              AuditConfig audit_cfg, EncoderConfig enc,
              const std::string& scores_path) {
  const SgdParams params{flags.t, flags.q, flags.sigma, flags.eta};
  params.validate();
  audit_cfg.delta_target = flags.delta;

  AuditScenario sc;
  if (scenario == "linear") {
    sc = LinearAdversarial{params};
  } else {
    enc.steps = flags.t;
    enc.sampling_rate = flags.q;
    enc.noise_multiplier = flags.sigma;
    enc.learning_rate = flags.eta;
    sc = EncodingAttack{enc};
  }

  std::vector<double> with_scores;
  std::vector<double> without_scores;
  const bool want_scores = !scores_path.empty();
  const AuditResult result =
      run_audit(sc, audit_cfg, 0, want_scores ? &with_scores : nullptr,
                want_scores ? &without_scores : nullptr);
  if (want_scores) {
    std::ofstream scores_file(scores_path);
    if (!scores_file) {
      throw std::invalid_argument("cannot open scores file: " + scores_path);
    }
    write_scores_csv(scores_file, with_scores, without_scores);
  }

  const double heuristic = heuristic_epsilon(params, flags.delta);
  const double standard = standard_epsilon(params, flags.delta);
  const SweepResult sweep = heuristic_sweep_max(params, flags.delta);
  std::ofstream file;
  std::ostream& out = open_output(flags.out, file);
  emit_flat(out, flags.format,
            {{"scenario", scenario},
             {"t", flags.t},
             {"q", rounded(flags.q)},
             {"sigma", rounded(flags.sigma)},
             {"delta", rounded(flags.delta)},
             {"trials_per_arm", audit_cfg.trials_per_arm},
             {"seed", audit_cfg.seed},
             {"threshold", rounded(result.threshold)},
             {"tpr_lower_bound", rounded(result.tpr_bound)},
             {"fpr_upper_bound", rounded(result.fpr_bound)},
             {"true_positives", result.counts.true_positives},
             {"false_positives", result.counts.false_positives},
             {"positives_total", result.counts.positives_total},
             {"negatives_total", result.counts.negatives_total},
             {"eps_lower", rounded(result.eps_lower)},
             {"eps_heuristic", rounded(heuristic)},
             {"eps_standard_ub", rounded(standard)},
             {"eps_sweep_max", rounded(sweep.epsilon)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"last-iterate privacy accounting for noisy SGD"};
  app.require_subcommand(1);
  app.add_option("--sigfigs", g_sigfigs, "Significant digits in outputs")
      ->check(CLI::Range(3, 17));

  CommonFlags epsilon_flags;
  auto* epsilon_cmd =
      app.add_subcommand("epsilon", "Heuristic and baseline epsilon at delta");
  epsilon_cmd->add_option("--t", epsilon_flags.t, "Steps")->required();
  epsilon_cmd->add_option("--q", epsilon_flags.q, "Sampling rate")->required();
  epsilon_cmd->add_option("--sigma", epsilon_flags.sigma, "Noise multiplier")
      ->required();
  epsilon_cmd->add_option("--delta", epsilon_flags.delta, "Target delta");
  epsilon_cmd->add_option("--eta", epsilon_flags.eta, "Learning rate");
  add_output_flags(epsilon_cmd, epsilon_flags, "json");

  CommonFlags delta_flags;
  double delta_epsilon = 1.0;
  auto* delta_cmd =
      app.add_subcommand("delta", "Heuristic delta at a given epsilon");
  delta_cmd->add_option("--t", delta_flags.t, "Steps")->required();
  delta_cmd->add_option("--q", delta_flags.q, "Sampling rate")->required();
  delta_cmd->add_option("--sigma", delta_flags.sigma, "Noise multiplier")
      ->required();
  delta_cmd->add_option("--epsilon", delta_epsilon, "Epsilon")->required();
  delta_cmd->add_option("--eta", delta_flags.eta, "Learning rate");
  add_output_flags(delta_cmd, delta_flags, "json");

  CommonFlags sweep_flags;
  std::string regime = "c";
  std::int64_t t_min = 1, t_max = 1024;
  int t_count = 24;
  double target_eps = 8.0;
  auto* sweep_cmd = app.add_subcommand("sweep", "CSV sweep over step counts");
  sweep_cmd->add_option("--regime", regime,
                        "a: fix T*q and T*sigma^2; b: fix the standard "
                        "epsilon; c: fix q and sigma")
      ->check(CLI::IsMember({"a", "b", "c"}));
  sweep_cmd->add_option("--t", sweep_flags.t, "Anchor steps (regime a)");
  sweep_cmd->add_option("--q", sweep_flags.q, "Sampling rate")->required();
  sweep_cmd->add_option("--sigma", sweep_flags.sigma,
                        "Noise multiplier (regimes a, c)");
  sweep_cmd->add_option("--target-eps", target_eps,
                        "Standard epsilon target (regime b)");
  sweep_cmd->add_option("--t-min", t_min, "Smallest step count");
  sweep_cmd->add_option("--t-max", t_max, "Largest step count");
  sweep_cmd->add_option("--t-count", t_count, "Grid size (log-spaced)");
  sweep_cmd->add_option("--delta", sweep_flags.delta, "Target delta");
  sweep_cmd->add_option("--eta", sweep_flags.eta, "Learning rate");
  add_output_flags(sweep_cmd, sweep_flags, "csv");

  CommonFlags quad_flags;
  std::int64_t quad_t_min = 1, quad_t_max = 16;
  std::vector<double> q_list{0.05, 0.1, 0.2, 0.4};
  double alpha = 0.5;
  double quad_target_eps = 1.0;
  auto* quad_cmd = app.add_subcommand(
      "quadratic", "Quadratic-regularizer epsilon ratio over a grid");
  quad_cmd->add_option("--t-min", quad_t_min, "Smallest step count");
  quad_cmd->add_option("--t-max", quad_t_max, "Largest step count");
  quad_cmd->add_option("--q-list", q_list, "Sampling rates");
  quad_cmd->add_option("--alpha", alpha, "Regularizer strength");
  quad_cmd->add_option("--target-eps", quad_target_eps,
                       "Single-step calibration epsilon");
  quad_cmd->add_option("--delta", quad_flags.delta, "Target delta");
  quad_cmd->add_option("--eta", quad_flags.eta, "Learning rate");
  add_output_flags(quad_cmd, quad_flags, "csv");

  CommonFlags enc_flags;
  EncoderConfig enc_cfg;
  std::int64_t enc_trials = 1000;
  std::uint64_t enc_seed = 0;
  bool analytic = false;
  double amplification = 100.0;
  auto* enc_cmd = app.add_subcommand(
      "encode-attack", "History-encoding attack simulator diagnostics");
  enc_cmd->add_option("--t", enc_flags.t, "Steps (= model dimension)")
      ->required();
  enc_cmd->add_option("--q", enc_flags.q, "Canary sampling rate")->required();
  enc_cmd->add_option("--sigma", enc_flags.sigma, "Noise multiplier")
      ->required();
  enc_cmd->add_option("--trials", enc_trials, "Simulated runs");
  enc_cmd->add_option("--seed", enc_seed, "Random seed");
  enc_cmd->add_option("--eta", enc_flags.eta, "Learning rate");
  enc_cmd->add_flag("--analytic", analytic,
                    "Shift-register variant with continuous decoding");
  enc_cmd->add_option("--v", amplification, "Amplification (analytic mode)");
  enc_cmd->add_option("--batch-repeaters", enc_cfg.batch_repeaters,
                      "Repeater count");
  enc_cmd->add_option("--big-val", enc_cfg.big_val, "Amplified bit magnitude");
  enc_cmd->add_option("--t-past", enc_cfg.t_past, "Settled-bit threshold");
  enc_cmd->add_option("--t-last", enc_cfg.t_last, "Fresh-bit threshold");
  add_output_flags(enc_cmd, enc_flags, "json");

  CommonFlags audit_flags;
  std::string scenario = "linear";
  AuditConfig audit_cfg;
  EncoderConfig audit_enc;
  std::string scores_path;
  auto* audit_cmd =
      app.add_subcommand("audit", "Monte Carlo epsilon lower bound");
  audit_cmd->add_option("--scenario", scenario, "Membership game")
      ->check(CLI::IsMember({"linear", "encoding"}));
  audit_cmd->add_option("--t", audit_flags.t, "Steps")->required();
  audit_cmd->add_option("--q", audit_flags.q, "Sampling rate")->required();
  audit_cmd->add_option("--sigma", audit_flags.sigma, "Noise multiplier")
      ->required();
  audit_cmd->add_option("--trials", audit_cfg.trials_per_arm,
                        "Trials per arm");
  audit_cmd->add_option("--seed", audit_cfg.seed, "Random seed");
  audit_cmd->add_option("--delta", audit_flags.delta, "Target delta");
  audit_cmd->add_option("--eta", audit_flags.eta, "Learning rate");
  audit_cmd->add_option("--confidence", audit_cfg.confidence,
                        "Total error budget of the bound");
  audit_cmd->add_option("--calibration-fraction",
                        audit_cfg.calibration_fraction,
                        "Share of trials used to pick the threshold");
  audit_cmd->add_option("--scores-out", scores_path,
                        "Write per-trial scores as CSV");
  audit_cmd->add_option("--batch-repeaters", audit_enc.batch_repeaters,
                        "Repeater count (encoding)");
  audit_cmd->add_option("--big-val", audit_enc.big_val,
                        "Amplified bit magnitude (encoding)");
  audit_cmd->add_option("--t-past", audit_enc.t_past,
                        "Settled-bit threshold (encoding)");
  audit_cmd->add_option("--t-last", audit_enc.t_last,
                        "Fresh-bit threshold (encoding)");
  add_output_flags(audit_cmd, audit_flags, "json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (epsilon_cmd->parsed()) return cmd_epsilon(epsilon_flags);
    if (delta_cmd->parsed()) return cmd_delta(delta_flags, delta_epsilon);
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_flags, regime, t_min, t_max, t_count, target_eps);
    }
    if (quad_cmd->parsed()) {
      return cmd_quadratic(quad_flags, quad_t_min, quad_t_max, q_list, alpha,
                           quad_target_eps);
    }
    if (enc_cmd->parsed()) {
      return cmd_encode_attack(enc_flags, enc_cfg, enc_trials, enc_seed,
                               analytic, amplification);
    }
    if (audit_cmd->parsed()) {
      return cmd_audit(audit_flags, scenario, audit_cfg, audit_enc,
                       scores_path);
    }
  } catch (const BracketError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ClippingError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
