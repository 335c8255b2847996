#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lrscb/error.hpp"

namespace lrscb {

using Vector = Eigen::VectorXd;
// Column-major so that one coordinate across all arms is contiguous.
using ContextMatrix = Eigen::MatrixXd;

using ArmIndex = int;
using Round = std::uint64_t;

// Hidden truth of a contextual linear bandit. Learners never read
// `theta_star`; only the environment and the regret accounting do.
struct BanditInstance {
  Vector theta_star;
  int num_arms = 2;
  double noise_sigma = 1.0;
  double rho_min = 1.0;
  double context_scale = 1.0;

  int dim() const noexcept { return static_cast<int>(theta_star.size()); }

  // Largest possible per-coordinate magnitude of a context, c / sqrt(d).
  double coordinate_bound() const noexcept { return context_scale / std::sqrt(static_cast<double>(dim())); }

  void validate() const {
    if (theta_star.size() < 1) throw ConfigError("dimension must be positive", "d");
    if (num_arms < 1) throw ConfigError("number of arms must be positive", "k");
    if (!(theta_star.norm() <= 1.0 + 1e-12)) throw ConfigError("||theta*|| must not exceed 1", "theta");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative", "sigma");
    if (!(rho_min > 0.0)) throw ConfigError("rho_min must be positive", "rho_min");
    if (!(context_scale > 0.0)) throw ConfigError("context scale must be positive", "c");
  }
};

// The K x d block of contexts shown to the learner at round `round`
// (row i is the context of arm i).
struct ContextSet {
  Round round = 1;
  ContextMatrix contexts;

  int num_arms() const noexcept { return static_cast<int>(contexts.rows()); }
  int dim() const noexcept { return static_cast<int>(contexts.cols()); }
  auto row(ArmIndex i) const { return contexts.row(i); }
};

struct ArmValue {
  ArmIndex arm = 0;
  double value = 0.0;
};

// argmax_j <ctx_j, theta>, lowest index on ties.
inline ArmValue best_arm(const ContextSet& ctx, const Vector& theta) {
  if (ctx.dim() != theta.size()) throw ConfigError("context dimension does not match parameter dimension", "d");
  if (ctx.num_arms() < 1) throw ConfigError("context set has no arms", "k");
  ArmValue best{0, ctx.row(0).dot(theta)};
  for (ArmIndex i = 1; i < ctx.num_arms(); ++i) {
    const double v = ctx.row(i).dot(theta);
    if (v > best.value) best = {i, v};
  }
  return best;
}

inline ArmValue best_arm(const BanditInstance& instance, const ContextSet& ctx) {
  if (ctx.num_arms() != instance.num_arms) throw ConfigError("context set has the wrong number of arms", "k");
  return best_arm(ctx, instance.theta_star);
}

// max_j <ctx_j, theta> - <ctx_chosen, theta>.
inline double regret_increment(const ContextSet& ctx, const Vector& theta, ArmIndex chosen) {
  if (chosen < 0 || chosen >= ctx.num_arms()) throw ConfigError("chosen arm out of range", "arm");
  const ArmValue best = best_arm(ctx, theta);
  return best.value - ctx.row(chosen).dot(theta);
}

inline double regret_increment(const BanditInstance& instance, const ContextSet& ctx, ArmIndex chosen) {
  if (ctx.num_arms() != instance.num_arms) throw ConfigError("context set has the wrong number of arms", "k");
  return regret_increment(ctx, instance.theta_star, chosen);
}

// True when `round` belongs to the checkpoint grid {1, 2, 4, ...} ∪ {horizon}.
constexpr bool is_checkpoint(Round round, Round horizon) noexcept {
  return round >= 1 && ((round & (round - 1)) == 0 || round == horizon);
}

inline std::vector<Round> checkpoint_grid(Round horizon) {
  std::vector<Round> grid;
  for (Round r = 1; r < horizon; r *= 2) grid.push_back(r);
  grid.push_back(horizon);
  return grid;
}

// Cumulative pseudo-regret with snapshots on the geometric checkpoint grid.
class RegretTrace {
 public:
  struct Checkpoint {
    Round round;
    double cumulative;
  };

  RegretTrace() = default;
  explicit RegretTrace(Round horizon) : horizon_(horizon) {
    if (horizon < 1) throw ConfigError("horizon must be positive", "t");
  }

  void add(double increment) {
    ++rounds_;
    cumulative_ += increment;
    if (is_checkpoint(rounds_, horizon_)) checkpoints_.push_back({rounds_, cumulative_});
  }

  Round horizon() const noexcept { return horizon_; }
  Round rounds() const noexcept { return rounds_; }
  double cumulative() const noexcept { return cumulative_; }
  const std::vector<Checkpoint>& checkpoints() const noexcept { return checkpoints_; }

 private:
  Round horizon_ = 1;
  Round rounds_ = 0;
  double cumulative_ = 0.0;
  std::vector<Checkpoint> checkpoints_;
};

}  // namespace lrscb
