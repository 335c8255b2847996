#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrscb/alb_norm.hpp"
#include "lrscb/bandit_core.hpp"
#include "lrscb/env.hpp"
#include "lrscb/error.hpp"
#include "lrscb/oful.hpp"

namespace lrscb {

// Epoch lengths T_i = floor(T_1 (ln T)^(i-1)) emitted while they fit in the
// horizon, then one final epoch holding the remainder, so the lengths sum to
// T exactly. Slack of epoch i is delta / 2^(i-1).
struct EpochPlan {
  Round horizon = 0;
  Round first_length = 0;
  std::vector<Round> lengths;
  std::vector<double> slacks;

  std::size_t size() const noexcept { return lengths.size(); }
};

inline EpochPlan build_epoch_plan(Round horizon, Round first_length, double delta) {
  if (first_length > horizon) throw ConfigError("T_1 must not exceed T", "t1");
  if (first_length < 3) throw ConfigError("T_1 must be at least 3", "t1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)", "delta");
  EpochPlan plan;
  plan.horizon = horizon;
  plan.first_length = first_length;
  const double growth = std::log(static_cast<double>(horizon));
  Round used = 0;
  double factor = 1.0;
  double slack = delta;
  for (;;) {
    const double exact = static_cast<double>(first_length) * factor;
    if (exact > static_cast<double>(horizon - used)) break;
    const auto length = static_cast<Round>(std::floor(exact));
    plan.lengths.push_back(length);
    plan.slacks.push_back(slack);
    used += length;
    factor *= growth;
    slack /= 2.0;
  }
  if (used < horizon) {
    plan.lengths.push_back(horizon - used);
    plan.slacks.push_back(slack);
  }
  return plan;
}

// ceil(C_1 (d^2 / rho^2) ln^4(K T / delta) ln(d T / delta)).
inline double theoretical_T1(int d, double rho_min, int num_arms, Round horizon, double delta, double c1 = 1.0) {
  const double T = static_cast<double>(horizon);
  const double lk = std::log(num_arms * T / delta);
  const double ld = std::log(d * T / delta);
  return std::ceil(c1 * (static_cast<double>(d) * d) / (rho_min * rho_min) * std::pow(lk, 4) * ld);
}

// y - <x, est>
inline double shift_reward(double y, const Vector& x, const Vector& est) {
  if (x.size() != est.size()) throw ConfigError("shift vector has the wrong dimension", "d");
  return y - x.dot(est);
}

struct BoundCurvePoint {
  bool in_regime = false;
  double lambda_factor = 0.0;  // Λ
  double log_factor = 0.0;     // 𝔗
  double value = 0.0;
};

// C_2 (d / rho)^{3/2} Λ^5 𝔗 sqrt(ln T). Out of regime when the argument of
// the outer logarithm in Λ does not exceed 1.
inline BoundCurvePoint bound_curve_eval(int d, double rho_min, int num_arms, Round horizon, double delta,
                                        double c2 = 1.0) {
  const double T = static_cast<double>(horizon);
  const double K = num_arms;
  const double dd = d;
  const double log_t = std::log(T);
  const double log_kt = std::log(K * T / delta);
  const double log_dt = std::log(dd * T / delta);
  const double rho2 = rho_min * rho_min;
  const double common = log_t * std::pow(log_kt, 4) * log_dt / (rho2 * delta);

  BoundCurvePoint point;
  const double ratio = rho2 * T / (dd * dd * std::pow(log_kt, 4) * log_dt);
  if (!(ratio > 1.0) || !(log_t > 1.0)) return point;
  point.in_regime = true;
  point.lambda_factor = std::log(ratio) / std::log(log_t);
  point.log_factor = std::pow(std::log(K * dd * dd * common), 3) * std::pow(std::log(dd * dd * dd * common), 2);
  point.value = c2 * std::pow(dd / rho_min, 1.5) * std::pow(point.lambda_factor, 5) * point.log_factor *
                std::sqrt(log_t);
  return point;
}

// Λ for a given outer-log argument; separated so the definition can be
// checked directly.
inline double lambda_factor_from_ratio(double ratio, Round horizon) {
  return std::log(ratio) / std::log(std::log(static_cast<double>(horizon)));
}

// True when d >= C_1 (ln T / ln ln T) ln(K^2 / delta).
inline bool dimension_condition_holds(int d, int num_arms, Round horizon, double delta, double c1 = 1.0) {
  const double log_t = std::log(static_cast<double>(horizon));
  return d >= c1 * log_t / std::log(log_t) * std::log(static_cast<double>(num_arms) * num_arms / delta);
}

struct ShiftAccumulator {
  Vector est;
  std::vector<Vector> per_epoch_estimates;

  void add(const Vector& estimate) {
    est += estimate;
    per_epoch_estimates.push_back(estimate);
  }
};

struct LrScbParams {
  Round horizon = 0;
  Round first_length = 0;  // 0 selects ceil(sqrt(T))
  double delta = 0.1;
  AlbParams alb;
  double ridge_lambda = 1.0;
  double radius_scale = 1.0;
  ShiftFrame frame = ShiftFrame::restored;
};

enum class EpochLearner { oful, alb_norm, shifted_oful };

struct LrScbEpoch {
  Round first_round;
  Round length;
  double delta;
  EpochLearner learner;
  // ||theta* - est|| after this epoch's estimate is folded in.
  double residual_norm;
  std::vector<AlbEpoch> alb_epochs;
};

struct LrScbResult {
  RegretTrace trace;          // pseudo-regret against theta* over all T rounds
  RegretTrace shifted_trace;  // each epoch measured against theta* - est of that epoch
  ShiftAccumulator shift;
  EpochPlan plan;
  std::vector<LrScbEpoch> epochs;
  std::vector<std::string> warnings;
};

inline Round epoch_tau(const AlbParams& alb, double rho_min, int d, Round length, double delta) {
  return alb.tau > 0 ? alb.tau : tau_min(rho_min, d, length, delta);
}

// Every epoch after the first except the last must fit ALB-Norm's 2 tau
// exploration rounds plus one.
inline void check_epoch_plan(const EpochPlan& plan, const AlbParams& alb, double rho_min, int d) {
  for (std::size_t i = 1; i + 1 < plan.size(); ++i) {
    const Round tau = epoch_tau(alb, rho_min, d, plan.lengths[i], plan.slacks[i]);
    if (plan.lengths[i] < 2 * tau + 1)
      throw ConfigError("epoch " + std::to_string(i + 1) + " (length " + std::to_string(plan.lengths[i]) +
                            ") is too short for ALB-Norm exploration with tau = " + std::to_string(tau),
                        "tau");
  }
}

inline Round default_first_length(Round horizon) {
  return static_cast<Round>(std::ceil(std::sqrt(static_cast<double>(horizon))));
}

// Epoch 1 plays OFUL (b = 1, no shift); every later epoch plays ALB-Norm on
// rewards shifted by the running sum of previous estimates, then adds its
// own estimate to that sum. A final remainder epoch too short for ALB-Norm's
// exploration is played by shifted OFUL with b = 1.
inline LrScbResult lr_scb_run(const Environment& env, const LrScbParams& params) {
  const Round T = params.horizon;
  const Round t1 = params.first_length > 0 ? params.first_length : default_first_length(T);
  LrScbResult result;
  result.plan = build_epoch_plan(T, t1, params.delta);
  check_epoch_plan(result.plan, params.alb, env.instance().rho_min, env.dim());
  result.trace = RegretTrace(T);
  result.shifted_trace = RegretTrace(T);
  result.shift.est = Vector::Zero(env.dim());
  const Vector& theta = env.instance().theta_star;

  if (!dimension_condition_holds(env.dim(), env.num_arms(), T, params.delta))
    result.warnings.push_back("dimension condition d >= (ln T / ln ln T) ln(K^2/delta) is violated");

  OfulParams oful;
  oful.norm_bound = 1.0;
  oful.ridge_lambda = params.ridge_lambda;
  oful.radius_scale = params.radius_scale;
  oful.frame = params.frame;

  AlbParams alb = params.alb;
  alb.ridge_lambda = params.ridge_lambda;
  alb.radius_scale = params.radius_scale;
  alb.frame = params.frame;

  Round next = 1;
  for (std::size_t i = 0; i < result.plan.size(); ++i) {
    const Round length = result.plan.lengths[i];
    const double delta = result.plan.slacks[i];
    LrScbEpoch epoch{next, length, delta, EpochLearner::oful, 0.0, {}};
    Vector estimate;
    if (i == 0) {
      oful.delta = delta;
      estimate = detail::oful_segment(env, oful, length, length, result.shift.est, next, result.trace,
                                      &result.shifted_trace)
                     .estimate();
    } else {
      const Round tau = resolve_tau(alb, env, length, delta);
      if (length >= 2 * tau + 1) {
        epoch.learner = EpochLearner::alb_norm;
        AlbResult r = detail::alb_segment(env, alb, length, delta, result.shift.est, next, result.trace,
                                          &result.shifted_trace);
        estimate = std::move(r.run.estimate);
        epoch.alb_epochs = std::move(r.epochs);
      } else {
        epoch.learner = EpochLearner::shifted_oful;
        oful.delta = delta;
        estimate = detail::oful_segment(env, oful, length, length, result.shift.est, next, result.trace,
                                        &result.shifted_trace)
                       .estimate();
      }
    }
    result.shift.add(estimate);
    epoch.residual_norm = (theta - result.shift.est).norm();
    result.epochs.push_back(std::move(epoch));
    next += length;
  }
  return result;
}

}  // namespace lrscb
