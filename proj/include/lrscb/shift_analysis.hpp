#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "lrscb/bandit_core.hpp"
#include "lrscb/env.hpp"
#include "lrscb/error.hpp"
#include "lrscb/oful.hpp"
#include "lrscb/rng.hpp"

namespace lrscb {

// Per-round terms of the shift comparison for the played arm X = ctx_chosen:
//   true_gap     = max_j <beta_j - X, theta*>
//   shifted_gap  = max_j <beta_j - X, theta* - Γ>
//   correction   = <beta* - X, Γ>,  beta* the best context under theta*
// so that true_gap <= shifted_gap + correction.
struct ShiftTerms {
  double true_gap = 0.0;
  double shifted_gap = 0.0;
  double correction = 0.0;
  bool argmax_coincide = true;
};

inline ShiftTerms shift_terms(const ContextSet& ctx, const Vector& theta_star, const Vector& gamma, ArmIndex chosen) {
  if (gamma.size() != theta_star.size()) throw ConfigError("shift vector has the wrong dimension", "d");
  ShiftTerms terms;
  const ArmValue best = best_arm(ctx, theta_star);
  const auto x = ctx.row(chosen);
  terms.true_gap = regret_increment(ctx, theta_star, chosen);
  terms.shifted_gap = regret_increment(ctx, theta_star - gamma, chosen);
  terms.correction = ctx.row(best.arm).dot(gamma) - x.dot(gamma);
  terms.argmax_coincide = best.arm == best_arm(ctx, gamma).arm;
  return terms;
}

// Sums of the shift terms over one Γ-shifted OFUL trajectory.
struct PairedShiftResult {
  double r_true = 0.0;
  double r_shifted = 0.0;
  double correction = 0.0;
  bool argmax_always_coincided = true;
  Vector estimate;
};

inline PairedShiftResult paired_shift_run(const Environment& env, const OfulParams& params, const Vector& gamma,
                                          Round horizon) {
  if (gamma.size() != env.dim()) throw ConfigError("shift vector has the wrong dimension", "d");
  PairedShiftResult result;
  const int num_arms = env.num_arms();
  Vector gamma_dots(num_arms);
  const RunResult run = oful_run(env, params, horizon, gamma, 1, [&](const RoundRecord& rec) {
    gamma_dots.noalias() = rec.ctx.contexts * gamma;
    ArmIndex gamma_best = 0;
    for (ArmIndex i = 1; i < num_arms; ++i)
      if (gamma_dots[i] > gamma_dots[gamma_best]) gamma_best = i;
    result.correction += gamma_dots[rec.true_best] - gamma_dots[rec.chosen];
    if (gamma_best != rec.true_best) result.argmax_always_coincided = false;
  });
  result.r_true = run.true_trace.cumulative();
  result.r_shifted = run.shifted_trace.cumulative();
  result.estimate = run.estimate;
  return result;
}

// r_true <= r_shifted + correction up to a relative tolerance.
inline bool decomposition_holds(const PairedShiftResult& r, double rel_tol = 1e-9) {
  const double scale = std::max({1.0, std::abs(r.r_true), std::abs(r.r_shifted), std::abs(r.correction)});
  return r.r_true <= r.r_shifted + r.correction + rel_tol * scale;
}

// argmax_j <beta_j, theta*> == argmax_j <beta_j, Γ>, lowest index on ties.
inline bool argmax_coincidence(const ContextSet& ctx, const Vector& theta_star, const Vector& gamma) {
  return best_arm(ctx, theta_star).arm == best_arm(ctx, gamma).arm;
}

// Monte-Carlo frequency of argmax_coincidence over n fresh context sets.
inline double coincidence_probability(const ContextLaw& law, const Vector& theta_star, const Vector& gamma,
                                      int num_arms, std::uint64_t n_samples, const CounterStream& stream) {
  if (n_samples < 1000) throw ConfigError("coincidence probability needs at least 1000 samples", "n");
  if (theta_star.size() != law.dim || gamma.size() != law.dim)
    throw ConfigError("parameter dimension differs from context dimension", "d");
  std::uint64_t hits = 0;
  ContextSet ctx;
  for (std::uint64_t s = 1; s <= n_samples; ++s) {
    sample_context_set(law, num_arms, stream, s, ctx);
    if (argmax_coincidence(ctx, theta_star, gamma)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

// Γ = theta* - psi * u for a unit direction u.
inline Vector shift_at_distance(const Vector& theta_star, double psi, const Vector& direction) {
  return theta_star - psi * direction;
}

struct ShiftExperimentConfig {
  int dim = 20;
  int num_arms = 20;
  double psi = 0.1;
  // ||theta*||; theta* points in a random direction per trial.
  double theta_norm = 1.0;
  Round horizon = 10000;
  int trials = 50;
  double noise_sigma = 1.0;
  double context_scale = 1.0;
  std::uint64_t base_seed = 1;
  OfulParams oful;

  // The regime ||theta* - Γ|| <= psi < 1 / (2 sqrt 2) assumed by the
  // dominance statement.
  bool in_dominance_regime() const noexcept { return psi < 1.0 / (2.0 * std::numbers::sqrt2); }

  void validate() const {
    if (trials < 30) throw ConfigError("shift dominance needs at least 30 trials", "trials");
    if (!(psi >= 0.0)) throw ConfigError("psi must be nonnegative", "psi");
    if (!(theta_norm >= 0.0 && theta_norm <= 1.0)) throw ConfigError("||theta*|| must lie in [0, 1]", "theta_norm");
    if (dim < 1 || num_arms < 2 || horizon < 1) throw ConfigError("invalid shift experiment dimensions");
  }
};

// Instance and shift of trial `trial`: theta* of norm theta_norm in a random
// direction, Γ = theta* - psi u with an independent random unit u.
inline constexpr std::uint64_t kShiftDirectionCounter = 1u << 20;

struct ShiftTrial {
  Environment env;
  Vector gamma;
};

inline ShiftTrial make_shift_trial(const ShiftExperimentConfig& config, int trial) {
  const std::uint64_t seed = trial_seed(config.base_seed, static_cast<std::uint64_t>(trial));
  Environment env = random_instance_environment(config.dim, config.num_arms, config.noise_sigma,
                                                config.context_scale, config.theta_norm, seed);
  const CounterStream stream(seed, StreamTag::instance);
  Vector gamma = shift_at_distance(env.instance().theta_star, config.psi,
                                   random_unit_vector(config.dim, stream, kShiftDirectionCounter));
  return {std::move(env), std::move(gamma)};
}

struct DominanceSummary {
  double frequency = 0.0;
  int trials = 0;
  std::vector<PairedShiftResult> runs;
};

// Fraction of trials with r_true <= r_shifted.
inline DominanceSummary shift_dominance_frequency(const ShiftExperimentConfig& config) {
  config.validate();
  DominanceSummary summary;
  summary.trials = config.trials;
  int hits = 0;
  for (int trial = 0; trial < config.trials; ++trial) {
    const ShiftTrial t = make_shift_trial(config, trial);
    PairedShiftResult r = paired_shift_run(t.env, config.oful, t.gamma, config.horizon);
    if (r.r_true <= r.r_shifted) ++hits;
    summary.runs.push_back(std::move(r));
  }
  summary.frequency = static_cast<double>(hits) / config.trials;
  return summary;
}

}  // namespace lrscb
