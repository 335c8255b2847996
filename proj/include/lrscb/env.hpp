#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lrscb/bandit_core.hpp"
#include "lrscb/error.hpp"
#include "lrscb/rng.hpp"

namespace lrscb {

enum class ContextKind { uniform_box, custom };

// I.i.d. context law on the box [-c/sqrt(d), c/sqrt(d)]^d. Coordinates are
// drawn independently; a custom law supplies the map from a Uniform(0,1)
// draw to a point of [-1, 1], which is then scaled by c/sqrt(d).
struct ContextLaw {
  ContextKind kind = ContextKind::uniform_box;
  int dim = 1;
  double scale = 1.0;
  double declared_rho_min = 1.0 / 3.0;
  std::function<double(double)> coordinate_map;

  static ContextLaw uniform_box(int d, double c) {
    ContextLaw law;
    law.kind = ContextKind::uniform_box;
    law.dim = d;
    law.scale = c;
    law.declared_rho_min = c * c / (3.0 * d);
    law.validate();
    return law;
  }

  static ContextLaw custom(int d, double c, double declared_rho_min, std::function<double(double)> map) {
    ContextLaw law;
    law.kind = ContextKind::custom;
    law.dim = d;
    law.scale = c;
    law.declared_rho_min = declared_rho_min;
    law.coordinate_map = std::move(map);
    law.validate();
    return law;
  }

  // Coordinates uniform on the two corners {-c/sqrt(d), +c/sqrt(d)}; second moment c^2/d * I.
  static ContextLaw rademacher_box(int d, double c) {
    return custom(d, c, c * c / d, [](double u) { return u < 0.5 ? -1.0 : 1.0; });
  }

  double coordinate_bound() const noexcept { return scale / std::sqrt(static_cast<double>(dim)); }

  void validate() const {
    if (dim < 1) throw ConfigError("context dimension must be positive", "d");
    if (dim >= 8190) throw ConfigError("context dimension too large for the counter layout", "d");
    if (!(scale > 0.0)) throw ConfigError("context scale must be positive", "c");
    if (!(declared_rho_min > 0.0)) throw ConfigError("declared rho_min must be positive", "rho_min");
    if (kind == ContextKind::custom && !coordinate_map) throw ConfigError("custom context law needs a coordinate map");
  }
};

enum class NoiseKind { gaussian, bounded_uniform };

// Additive reward noise. For bounded_uniform the support is [-sigma, sigma],
// which is sigma-sub-Gaussian.
struct NoiseLaw {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma = 1.0;

  static NoiseLaw gaussian(double sigma) { return {NoiseKind::gaussian, sigma}; }
  static NoiseLaw bounded_uniform(double sigma) { return {NoiseKind::bounded_uniform, sigma}; }

  double draw(const CounterStream& stream, std::uint64_t counter) const {
    if (sigma == 0.0) return 0.0;
    if (kind == NoiseKind::gaussian) return sigma * stream.normal(counter);
    return sigma * (2.0 * stream.uniform(counter) - 1.0);
  }
};

namespace detail {

constexpr int kMaxArms = 4096;

// Counter of the j-th coordinate pair of arm `arm` at round `round`.
constexpr std::uint64_t context_counter(Round round, int arm, int pair) noexcept {
  return (round << 24) | (static_cast<std::uint64_t>(arm) << 12) | static_cast<std::uint64_t>(pair);
}

}  // namespace detail

// Fills `out` with the K contexts of round `round`. Entry (arm, j) is a
// function of (stream, round, arm, j) only.
inline void sample_context_set(const ContextLaw& law, int num_arms, const CounterStream& stream, Round round,
                               ContextSet& out) {
  if (num_arms < 1 || num_arms >= detail::kMaxArms) throw ConfigError("number of arms out of range", "k");
  const int d = law.dim;
  if (out.contexts.rows() != num_arms || out.contexts.cols() != d) out.contexts.resize(num_arms, d);
  out.round = round;
  const double bound = law.coordinate_bound();
  const int pairs = (d + 1) / 2;
  // Coordinate pair p of an arm comes from one 64-bit draw: the low half
  // feeds coordinate p, the high half coordinate p + pairs.
  double* data = out.contexts.data();
  const auto column = [&](int j) { return data + static_cast<std::ptrdiff_t>(j) * num_arms; };
  if (law.kind == ContextKind::uniform_box) {
    // bound * (2u - 1) with u = (bits + 0.5) / 2^32, as one multiply-add on
    // the bits reinterpreted as a signed offset from 2^31.
    const double step = bound * 0x1.0p-31;
    const double offset = bound * 0x1.0p-32;
    for (int p = 0; p < pairs; ++p) {
      double* lo = column(p);
      double* hi = p + pairs < d ? column(p + pairs) : nullptr;
      const std::uint64_t base = detail::context_counter(round, 0, p);
      for (int arm = 0; arm < num_arms; ++arm) {
        const std::uint64_t r = stream.bits(base + (static_cast<std::uint64_t>(arm) << 12));
        lo[arm] = step * static_cast<double>(static_cast<std::int32_t>(static_cast<std::uint32_t>(r) ^ 0x80000000U)) + offset;
        if (hi)
          hi[arm] = step * static_cast<double>(static_cast<std::int32_t>(static_cast<std::uint32_t>(r >> 32) ^ 0x80000000U)) + offset;
      }
    }
    return;
  }
  for (int p = 0; p < pairs; ++p) {
    double* lo = column(p);
    double* hi = p + pairs < d ? column(p + pairs) : nullptr;
    for (int arm = 0; arm < num_arms; ++arm) {
      double a, b;
      stream.uniform_pair(detail::context_counter(round, arm, p), a, b);
      a = bound * law.coordinate_map(a);
      b = bound * law.coordinate_map(b);
      if (std::abs(a) > bound || (hi && std::abs(b) > bound))
        throw ConfigError("custom context law left the box [-c/sqrt(d), c/sqrt(d)]");
      lo[arm] = a;
      if (hi) hi[arm] = b;
    }
  }
}

inline ContextSet sample_context_set(const ContextLaw& law, int num_arms, const CounterStream& stream, Round round) {
  ContextSet out;
  sample_context_set(law, num_arms, stream, round, out);
  return out;
}

// <ctx_chosen, theta*> + xi, with xi keyed by the context set's round.
inline double draw_reward(const BanditInstance& instance, const ContextSet& ctx, ArmIndex chosen,
                          const NoiseLaw& noise, const CounterStream& stream) {
  if (chosen < 0 || chosen >= ctx.num_arms()) throw ConfigError("chosen arm out of range", "arm");
  return ctx.row(chosen).dot(instance.theta_star) + noise.draw(stream, ctx.round);
}

struct AuditResult {
  double empirical_floor = 0.0;
  bool pass = false;
};

// Smallest eigenvalue of (1/n) sum beta beta^T over n fresh draws, compared
// with 0.8 x the declared floor.
inline AuditResult covariance_floor_audit(const ContextLaw& law, std::uint64_t n, const CounterStream& stream) {
  law.validate();
  const auto d = static_cast<std::uint64_t>(law.dim);
  if (n < 10 * d * d)
    throw ConfigError("covariance audit needs n >= 10 d^2 samples (got " + std::to_string(n) + ", need " +
                          std::to_string(10 * d * d) + ")",
                      "n");
  Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(law.dim, law.dim);
  ContextSet ctx;
  for (std::uint64_t s = 1; s <= n; ++s) {
    sample_context_set(law, 1, stream, s, ctx);
    moment.selfadjointView<Eigen::Lower>().rankUpdate(ctx.contexts.row(0).transpose());
  }
  moment = moment.selfadjointView<Eigen::Lower>();
  moment /= static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moment, Eigen::EigenvaluesOnly);
  AuditResult result;
  result.empirical_floor = eig.eigenvalues()(0);
  result.pass = result.empirical_floor >= 0.8 * law.declared_rho_min;
  return result;
}

// Everything one simulated trial needs: the hidden instance, the laws and
// the per-purpose random streams derived from one seed.
class Environment {
 public:
  Environment(BanditInstance instance, ContextLaw law, NoiseLaw noise, std::uint64_t seed)
      : instance_(std::move(instance)),
        law_(std::move(law)),
        noise_(noise),
        seed_(seed),
        contexts_(seed, StreamTag::contexts),
        noise_stream_(seed, StreamTag::noise),
        exploration_(seed, StreamTag::exploration) {
    instance_.validate();
    law_.validate();
    if (law_.dim != instance_.dim()) throw ConfigError("context law dimension differs from instance dimension", "d");
    if (instance_.num_arms >= detail::kMaxArms) throw ConfigError("too many arms", "k");
  }

  const BanditInstance& instance() const noexcept { return instance_; }
  const ContextLaw& law() const noexcept { return law_; }
  const NoiseLaw& noise() const noexcept { return noise_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int dim() const noexcept { return instance_.dim(); }
  int num_arms() const noexcept { return instance_.num_arms; }

  void contexts(Round round, ContextSet& out) const {
    sample_context_set(law_, instance_.num_arms, contexts_, round, out);
  }

  double reward(const ContextSet& ctx, ArmIndex chosen) const {
    return draw_reward(instance_, ctx, chosen, noise_, noise_stream_);
  }

  // Uniformly random arm for round `round`, independent of the contexts.
  ArmIndex random_arm(Round round) const {
    return static_cast<ArmIndex>(exploration_.below(round, static_cast<std::uint64_t>(instance_.num_arms)));
  }

 private:
  BanditInstance instance_;
  ContextLaw law_;
  NoiseLaw noise_;
  std::uint64_t seed_;
  CounterStream contexts_;
  CounterStream noise_stream_;
  CounterStream exploration_;
};

// Uniform direction on the unit sphere, drawn from `stream` at counters
// [first, first + d).
inline Vector random_unit_vector(int d, const CounterStream& stream, std::uint64_t first) {
  Vector v(d);
  do {
    for (int j = 0; j < d; ++j) v[j] = stream.normal(first + static_cast<std::uint64_t>(j));
    first += static_cast<std::uint64_t>(d);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

// Trial environment on the uniform box: theta* of norm theta_norm in a
// direction drawn from the instance stream of `seed`, Gaussian noise.
inline Environment random_instance_environment(int dim, int num_arms, double noise_sigma, double context_scale,
                                               double theta_norm, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("dimension must be positive", "d");
  const CounterStream stream(seed, StreamTag::instance);
  BanditInstance instance;
  instance.theta_star = theta_norm * random_unit_vector(dim, stream, 0);
  instance.num_arms = num_arms;
  instance.noise_sigma = noise_sigma;
  instance.context_scale = context_scale;
  ContextLaw law = ContextLaw::uniform_box(dim, context_scale);
  instance.rho_min = law.declared_rho_min;
  return Environment(std::move(instance), std::move(law), NoiseLaw::gaussian(noise_sigma), seed);
}

}  // namespace lrscb
