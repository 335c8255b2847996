#pragma once

#include <cstdint>
#include <utility>

#include "lrscb/env.hpp"

namespace lrscb::test {

// Uniform-box environment around a given theta*.
inline Environment box_environment(Vector theta, int num_arms, double sigma, std::uint64_t seed, double c = 1.0) {
  const int d = static_cast<int>(theta.size());
  BanditInstance instance;
  instance.theta_star = std::move(theta);
  instance.num_arms = num_arms;
  instance.noise_sigma = sigma;
  instance.context_scale = c;
  ContextLaw law = ContextLaw::uniform_box(d, c);
  instance.rho_min = law.declared_rho_min;
  return Environment(std::move(instance), std::move(law), NoiseLaw::gaussian(sigma), seed);
}

inline ContextSet make_contexts(std::initializer_list<std::initializer_list<double>> rows) {
  ContextSet ctx;
  const auto k = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.begin()->size());
  ctx.contexts.resize(k, d);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) ctx.contexts(i, j++) = v;
    ++i;
  }
  return ctx;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace lrscb::test
