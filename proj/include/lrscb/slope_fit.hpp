#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lrscb/bandit_core.hpp"
#include "lrscb/error.hpp"

namespace lrscb {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("fit_line: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientData("fit_line needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientData("fit_line: all x values coincide");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - sse / syy;
  return fit;
}

// One point of a mean regret curve.
struct CurvePoint {
  Round t = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline constexpr std::size_t kMinSlopePoints = 5;
inline constexpr Round kDefaultSlopeTMin = 1000;

namespace detail {

template <typename Transform>
LineFit fit_curve(std::span<const CurvePoint> curve, Round t_min, Transform&& transform_t) {
  std::vector<double> x, y;
  const Round lo = std::max<Round>(t_min, 3);
  for (const CurvePoint& p : curve) {
    if (p.t < lo || !(p.mean > 0.0)) continue;
    x.push_back(transform_t(static_cast<double>(p.t)));
    y.push_back(std::log(p.mean));
  }
  if (x.size() < kMinSlopePoints)
    throw InsufficientData("slope fit needs at least " + std::to_string(kMinSlopePoints) +
                           " checkpoints with t >= max(t_min, 3) and positive regret, got " +
                           std::to_string(x.size()));
  return fit_line(x, y);
}

}  // namespace detail

// ln R against ln t.
inline LineFit fit_loglog_slope(std::span<const CurvePoint> curve, Round t_min = kDefaultSlopeTMin) {
  return detail::fit_curve(curve, t_min, [](double t) { return std::log(t); });
}

// ln R against ln ln t; polylogarithmic regret R ~ (ln t)^k is a line of slope k.
inline LineFit fit_logloglog_slope(std::span<const CurvePoint> curve, Round t_min = kDefaultSlopeTMin) {
  return detail::fit_curve(curve, t_min, [](double t) { return std::log(std::log(t)); });
}

inline constexpr double kLinearityR2 = 0.98;

}  // namespace lrscb
