#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lrscb/bandit_core.hpp"
#include "lrscb/env.hpp"
#include "lrscb/error.hpp"
#include "lrscb/oful.hpp"

namespace lrscb {

inline constexpr double kMinNormBound = 1e-3;
inline constexpr double kMaxNormBound = 1.0;

// ceil((16 / rho^2 + 8 / (3 rho)) ln(2 d T / delta)): the sample count after
// which the empirical context covariance concentrates.
inline Round tau_min(double rho_min, int d, Round horizon, double delta) {
  if (!(rho_min > 0.0) || d < 1 || horizon < 1 || !(delta > 0.0 && delta < 1.0))
    throw ConfigError("tau_min parameters out of range");
  const double value = (16.0 / (rho_min * rho_min) + 8.0 / (3.0 * rho_min)) *
                       std::log(2.0 * d * static_cast<double>(horizon) / delta);
  return static_cast<Round>(std::ceil(value));
}

// sqrt(2) sigma sqrt((d / tau) ln(1 / delta_s)); the amount by which the
// exploratory norm estimate may undershoot ||theta*||.
inline double norm_slack(double sigma, int d, Round tau, double delta_s) {
  if (tau < 1) throw ConfigError("tau must be positive", "tau");
  if (!(delta_s > 0.0 && delta_s < 1.0)) throw ConfigError("delta_s must lie in (0, 1)", "delta_s");
  return std::sqrt(2.0) * sigma * std::sqrt(static_cast<double>(d) / static_cast<double>(tau) * std::log(1.0 / delta_s));
}

// Largest norm over the ball of radius `radius` around `estimate`.
inline double norm_ball_max(const Vector& estimate, double radius) { return estimate.norm() + radius; }

// Next norm bound: the ball maximum, kept within [kMinNormBound, previous].
inline double refine_norm_bound(const RidgeState& state, double radius, double previous) {
  if (!(radius >= 0.0)) throw ConfigError("radius must be nonnegative", "radius");
  return std::clamp(norm_ball_max(state.estimate(), radius), kMinNormBound, std::max(previous, kMinNormBound));
}

struct AlbParams {
  // Length of the random-arm exploration is 2 * tau. Zero selects tau_min.
  Round tau = 0;
  // Slack of the initial norm estimate. Zero reuses the run's delta.
  double delta_s = 0.0;
  double ridge_lambda = 1.0;
  double radius_scale = 1.0;
  ShiftFrame frame = ShiftFrame::restored;
};

struct AlbEpoch {
  Round first_round;
  Round length;
  Round planned_length;
  double delta;
  double norm_bound;
};

struct AlbResult {
  RunResult run;
  double initial_norm_bound = 1.0;
  Round tau = 0;
  std::vector<AlbEpoch> epochs;
  // Norm bound after the final refinement (b_{N+1}).
  double final_norm_bound = 1.0;
};

inline Round resolve_tau(const AlbParams& params, const Environment& env, Round total, double delta) {
  return params.tau > 0 ? params.tau : tau_min(env.instance().rho_min, env.dim(), total, delta);
}

namespace detail {

// Random-arm exploration for 2 tau rounds followed by the clipped norm
// estimate b_1. Appends to the traces.
inline double initial_norm_segment(const Environment& env, Round tau, double delta_s, double lambda,
                                   const Vector& reward_shift, Round first_round, RegretTrace& true_trace,
                                   RegretTrace* shifted_trace) {
  const int d = env.dim();
  const Vector& theta = env.instance().theta_star;
  const Vector shifted_theta = theta - reward_shift;
  RidgeState ridge(d, lambda);
  ContextSet ctx;
  for (Round k = 0; k < 2 * tau; ++k) {
    const Round round = first_round + k;
    env.contexts(round, ctx);
    const ArmIndex arm = env.random_arm(round);
    const auto x = ctx.contexts.row(arm);
    const double y = env.reward(ctx, arm);
    ridge.update(x, y - x.dot(reward_shift));
    true_trace.add(best_arm(ctx, theta).value - x.dot(theta));
    if (shifted_trace) shifted_trace->add(best_arm(ctx, shifted_theta).value - x.dot(shifted_theta));
  }
  const double b = ridge.estimate().norm() + norm_slack(env.instance().noise_sigma, d, tau, delta_s);
  return std::clamp(b, kMinNormBound, kMaxNormBound);
}

inline AlbResult alb_segment(const Environment& env, const AlbParams& params, Round total, double delta,
                             const Vector& reward_shift, Round first_round, RegretTrace& true_trace,
                             RegretTrace* shifted_trace) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)", "delta");
  const Round tau = resolve_tau(params, env, total, delta);
  if (total < 2 * tau + 1)
    throw ConfigError("ALB-Norm needs T >= 2 tau + 1 (T = " + std::to_string(total) +
                          ", tau = " + std::to_string(tau) + ")",
                      "tau");
  const double delta_s = params.delta_s > 0.0 ? params.delta_s : delta;

  AlbResult result;
  result.tau = tau;
  result.initial_norm_bound = detail::initial_norm_segment(env, tau, delta_s, params.ridge_lambda, reward_shift,
                                                           first_round, true_trace, shifted_trace);

  const int d = env.dim();
  double b = result.initial_norm_bound;
  double epoch_delta = delta;
  Round planned = static_cast<Round>(std::ceil(std::sqrt(static_cast<double>(total))));
  Round next = first_round + 2 * tau;
  Round remaining = total - 2 * tau;
  RidgeState last;
  while (remaining > 0) {
    const Round length = std::min(planned, remaining);
    OfulParams oful;
    oful.norm_bound = b;
    oful.delta = epoch_delta;
    oful.ridge_lambda = params.ridge_lambda;
    oful.radius_scale = params.radius_scale;
    oful.frame = params.frame;
    result.epochs.push_back({next, length, planned, epoch_delta, b});
    last = detail::oful_segment(env, oful, length, planned, reward_shift, next, true_trace, shifted_trace);
    const double radius =
        clipped_radius(oful, d, env.instance().rho_min, last.rounds_seen(), env.num_arms(), planned);
    b = refine_norm_bound(last, radius, b);
    next += length;
    remaining -= length;
    planned *= 2;
    epoch_delta /= 2.0;
  }
  result.final_norm_bound = b;
  result.run.estimate = last.estimate();
  return result;
}

}  // namespace detail

// ALB-Norm over `total` rounds on rewards shifted by `reward_shift`: random
// exploration for the initial norm bound, then OFUL restarted on doubling
// sub-epochs (first of length ceil(sqrt(total))) with halving slack and a
// non-increasing norm bound. The returned estimate is that of the last
// sub-epoch.
inline AlbResult alb_run(const Environment& env, const AlbParams& params, Round total, double delta,
                         const Vector& reward_shift, Round first_round = 1) {
  if (reward_shift.size() != env.dim()) throw ConfigError("reward shift has the wrong dimension", "d");
  RegretTrace true_trace(total), shifted_trace(total);
  AlbResult result = detail::alb_segment(env, params, total, delta, reward_shift, first_round, true_trace,
                                         &shifted_trace);
  result.run.true_trace = std::move(true_trace);
  result.run.shifted_trace = std::move(shifted_trace);
  return result;
}

}  // namespace lrscb
