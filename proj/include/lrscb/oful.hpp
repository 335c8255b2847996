#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "lrscb/bandit_core.hpp"
#include "lrscb/env.hpp"
#include "lrscb/error.hpp"

namespace lrscb {

// Incremental ridge regression: gram = lambda I + sum x x^T, moment = sum y x,
// estimate = gram^{-1} moment. The inverse is maintained with rank-one
// updates and rebuilt from a Cholesky factorization every kRefactorEvery
// updates.
class RidgeState {
 public:
  static constexpr Round kRefactorEvery = 4096;

  RidgeState() = default;
  RidgeState(int dim, double lambda)
      : gram_(Eigen::MatrixXd::Identity(dim, dim) * lambda),
        inverse_(Eigen::MatrixXd::Identity(dim, dim) / lambda),
        moment_(Vector::Zero(dim)),
        estimate_(Vector::Zero(dim)),
        scratch_(dim),
        x_(dim),
        lambda_(lambda) {
    if (dim < 1) throw ConfigError("ridge dimension must be positive", "d");
    if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be positive", "lambda");
  }

  template <typename Derived>
  void update(const Eigen::MatrixBase<Derived>& x_in, double y) {
    const int d = dim();
    x_.noalias() = x_in.transpose();
    const double* x = x_.data();
    double* u = scratch_.data();
    double* g = gram_.data();
    double* inv = inverse_.data();
    // Plain column loops: at bandit dimensions these beat the dynamic-size
    // Eigen kernels and vectorize without reassociation.
    for (int i = 0; i < d; ++i) u[i] = 0.0;
    for (int j = 0; j < d; ++j) {
      const double xj = x[j];
      const double* col = inv + static_cast<std::ptrdiff_t>(j) * d;
      double* gcol = g + static_cast<std::ptrdiff_t>(j) * d;
      for (int i = 0; i < d; ++i) {
        u[i] += col[i] * xj;
        gcol[i] += x[i] * xj;
      }
    }
    double xu = 0.0, xe = 0.0;
    for (int i = 0; i < d; ++i) {
      xu += x[i] * u[i];
      xe += x[i] * estimate_[i];
      moment_[i] += y * x[i];
    }
    const double denom = 1.0 + xu;
    for (int j = 0; j < d; ++j) {
      const double f = u[j] / denom;
      double* col = inv + static_cast<std::ptrdiff_t>(j) * d;
      for (int i = 0; i < d; ++i) col[i] -= u[i] * f;
    }
    // gram_new^{-1} moment_new == estimate + gram_old^{-1} x (y - x . estimate) / denom
    const double gain = (y - xe) / denom;
    for (int i = 0; i < d; ++i) estimate_[i] += u[i] * gain;
    ++rounds_;
    if (rounds_ % kRefactorEvery == 0) refactorize();
  }

  // Rebuilds the inverse and the estimate from the Gram matrix.
  void refactorize() {
    const Eigen::LLT<Eigen::MatrixXd> llt(gram_);
    inverse_ = llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    estimate_ = llt.solve(moment_);
  }

  // max_ij |(gram * gram_inverse - I)_ij|
  double inverse_residual() const {
    return (gram_ * inverse_ - Eigen::MatrixXd::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  }

  int dim() const noexcept { return static_cast<int>(moment_.size()); }
  Round rounds_seen() const noexcept { return rounds_; }
  double lambda() const noexcept { return lambda_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::MatrixXd& gram_inverse() const noexcept { return inverse_; }
  const Vector& moment() const noexcept { return moment_; }
  const Vector& estimate() const noexcept { return estimate_; }

 private:
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd inverse_;
  Vector moment_;
  Vector estimate_;
  Vector scratch_;
  Vector x_;
  double lambda_ = 1.0;
  Round rounds_ = 0;
};

// Value-returning form of RidgeState::update.
inline RidgeState ridge_update(RidgeState state, const Vector& x, double y) {
  if (x.size() != state.dim()) throw ConfigError("update vector has the wrong dimension", "d");
  state.update(x.transpose(), y);
  return state;
}

// (b + sqrt(d)) / (rho_min sqrt(t)) * ln(K T / delta); +infinity at t = 0.
inline double confidence_radius(double b, int d, double rho_min, Round t, int num_arms, Round horizon,
                                double delta) {
  if (t == 0) return std::numeric_limits<double>::infinity();
  if (!(b > 0.0) || d < 1 || !(rho_min > 0.0) || num_arms < 1 || horizon < 1)
    throw ConfigError("confidence radius parameters must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]", "delta");
  return (b + std::sqrt(static_cast<double>(d))) / (rho_min * std::sqrt(static_cast<double>(t))) *
         std::log(static_cast<double>(num_arms) * static_cast<double>(horizon) / delta);
}

struct ConfidenceBall {
  Vector center;
  double radius = 0.0;
  double norm_bound = 1.0;
  double delta = 0.1;
  Round horizon = 1;
};

// argmax_i <ctx_i, center> + radius ||ctx_i||, i.e. the arm whose best case
// over the ball is largest. Lowest index on ties.
inline ArmIndex optimistic_select(const ContextSet& ctx, const ConfidenceBall& ball) {
  if (ctx.dim() != ball.center.size()) throw ConfigError("ball center has the wrong dimension", "d");
  ArmIndex best = 0;
  double best_index = -std::numeric_limits<double>::infinity();
  for (ArmIndex i = 0; i < ctx.num_arms(); ++i) {
    const double norm = ctx.row(i).norm();
    const double index = ctx.row(i).dot(ball.center) + (norm == 0.0 ? 0.0 : ball.radius * norm);
    if (index > best_index) {
      best_index = index;
      best = i;
    }
  }
  return best;
}

inline ArmIndex optimistic_select(const RidgeState& state, const ConfidenceBall& ball, const ContextSet& ctx) {
  (void)state;
  return optimistic_select(ctx, ball);
}

// Where a reward-shifted learner centres its confidence ball when it picks
// arms: on its own estimate of theta* - shift, or translated back by the
// shift so that it ranks arms for theta* itself.
enum class ShiftFrame { residual, restored };

struct OfulParams {
  double norm_bound = 1.0;
  double delta = 0.1;
  double ridge_lambda = 1.0;
  // Multiplies the confidence radius. 1 gives the textbook formula.
  double radius_scale = 1.0;
  ShiftFrame frame = ShiftFrame::restored;

  void validate() const {
    if (!(norm_bound > 0.0)) throw ConfigError("norm bound b must be positive", "b");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)", "delta");
    if (!(ridge_lambda > 0.0)) throw ConfigError("ridge lambda must be positive", "lambda");
    if (!(radius_scale >= 0.0)) throw ConfigError("radius scale must be nonnegative", "radius_scale");
  }
};

// Per-round information handed to run observers.
struct RoundRecord {
  Round round;
  const ContextSet& ctx;
  ArmIndex chosen;
  ArmIndex true_best;
  double true_gap;
  double shifted_gap;
  double radius;
};

struct NoObserver {
  void operator()(const RoundRecord&) const noexcept {}
};

struct RunResult {
  RegretTrace true_trace;
  RegretTrace shifted_trace;
  Vector estimate;
};

// Radius actually used for selection: scaled formula, capped at b + sqrt(d).
inline double clipped_radius(const OfulParams& params, int d, double rho_min, Round t, int num_arms, Round horizon) {
  const double cap = params.norm_bound + std::sqrt(static_cast<double>(d));
  if (t == 0) return cap;
  const double r =
      params.radius_scale * confidence_radius(params.norm_bound, d, rho_min, t, num_arms, horizon, params.delta);
  return std::min(r, cap);
}

namespace detail {

// Plays `length` rounds starting at global round `first_round` with a fresh
// ridge state, appending to the traces. `planned_horizon` is the T used in
// the confidence radius. Returns the final ridge state.
template <typename Observer = NoObserver>
RidgeState oful_segment(const Environment& env, const OfulParams& params, Round length, Round planned_horizon,
                        const Vector& reward_shift, Round first_round, RegretTrace& true_trace,
                        RegretTrace* shifted_trace, Observer&& observe = {}) {
  params.validate();
  const int d = env.dim();
  const int num_arms = env.num_arms();
  if (reward_shift.size() != d) throw ConfigError("reward shift has the wrong dimension", "d");
  if (length < 1 || planned_horizon < 1) throw ConfigError("OFUL needs at least one round", "t");

  const Vector& theta = env.instance().theta_star;
  const Vector shifted_theta = theta - reward_shift;
  const bool restored = params.frame == ShiftFrame::restored;
  const double rho_min = env.instance().rho_min;
  const double cap = params.norm_bound + std::sqrt(static_cast<double>(d));
  const double coeff = params.radius_scale * (params.norm_bound + std::sqrt(static_cast<double>(d))) / rho_min *
                       std::log(static_cast<double>(num_arms) * static_cast<double>(planned_horizon) / params.delta);

  RidgeState ridge(d, params.ridge_lambda);
  ContextSet ctx;
  Vector center(d), x(d);
  Vector index_acc(num_arms), true_acc(num_arms), shifted_acc(num_arms), norm_acc(num_arms);
  for (Round k = 0; k < length; ++k) {
    const Round round = first_round + k;
    env.contexts(round, ctx);
    const Round seen = ridge.rounds_seen();
    const double radius = seen == 0 ? cap : std::min(coeff / std::sqrt(static_cast<double>(seen)), cap);
    if (restored) {
      center.noalias() = reward_shift + ridge.estimate();
    } else {
      center = ridge.estimate();
    }

    index_acc.setZero();
    true_acc.setZero();
    shifted_acc.setZero();
    norm_acc.setZero();
    double* idx = index_acc.data();
    double* tru = true_acc.data();
    double* shf = shifted_acc.data();
    double* sq = norm_acc.data();
    for (int j = 0; j < d; ++j) {
      const double* col = ctx.contexts.col(j).data();
      const double cj = center[j], tj = theta[j], sj = shifted_theta[j];
      for (int i = 0; i < num_arms; ++i) {
        const double v = col[i];
        idx[i] += v * cj;
        tru[i] += v * tj;
        shf[i] += v * sj;
        sq[i] += v * v;
      }
    }

    ArmIndex chosen = 0, true_best = 0, shifted_best = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (ArmIndex i = 0; i < num_arms; ++i) {
      const double index = idx[i] + radius * std::sqrt(sq[i]);
      if (index > best_index) {
        best_index = index;
        chosen = i;
      }
      if (tru[i] > tru[true_best]) true_best = i;
      if (shf[i] > shf[shifted_best]) shifted_best = i;
    }

    x = ctx.contexts.row(chosen).transpose();
    const double true_gap = tru[true_best] - tru[chosen];
    const double shifted_gap = shf[shifted_best] - shf[chosen];
    const double y = env.reward(ctx, chosen);
    ridge.update(x.transpose(), y - x.dot(reward_shift));

    true_trace.add(true_gap);
    if (shifted_trace) shifted_trace->add(shifted_gap);
    observe(RoundRecord{round, ctx, chosen, true_best, true_gap, shifted_gap, radius});
  }
  return ridge;
}

}  // namespace detail

// Plays OFUL for `horizon` rounds on rewards shifted by `reward_shift`
// (the learner is fed y - <x, reward_shift>). Records pseudo-regret against
// theta* and against theta* - reward_shift.
template <typename Observer = NoObserver>
RunResult oful_run(const Environment& env, const OfulParams& params, Round horizon, const Vector& reward_shift,
                   Round first_round = 1, Observer&& observe = {}) {
  RunResult result{RegretTrace(horizon), RegretTrace(horizon), Vector()};
  const RidgeState ridge = detail::oful_segment(env, params, horizon, horizon, reward_shift, first_round,
                                                result.true_trace, &result.shifted_trace,
                                                std::forward<Observer>(observe));
  result.estimate = ridge.estimate();
  return result;
}

inline RunResult oful_run(const Environment& env, const OfulParams& params, Round horizon) {
  return oful_run(env, params, horizon, Vector::Zero(env.dim()));
}

}  // namespace lrscb
