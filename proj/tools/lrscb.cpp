#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lrscb/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCheckFailed = 2;

struct Overrides {
  std::string config;
  std::string algo, d, k, t, t1, delta, sigma, c, lambda, radius_scale, tau, theta_norm, psi, frame, trials, seed,
      out, threads;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "flat key = value config file");
  cmd->add_option("--algo", o.algo, "oful, alb-norm, lr-scb, shift-analysis (comma separated)");
  cmd->add_option("--d", o.d, "context dimension");
  cmd->add_option("--k", o.k, "number of arms");
  cmd->add_option("--t", o.t, "horizon T");
  cmd->add_option("--t1", o.t1, "first epoch length (default ceil(sqrt(T)))");
  cmd->add_option("--delta", o.delta, "failure probability");
  cmd->add_option("--sigma", o.sigma, "noise standard deviation");
  cmd->add_option("--c", o.c, "context scale");
  cmd->add_option("--lambda", o.lambda, "ridge parameter");
  cmd->add_option("--radius-scale", o.radius_scale, "multiplier on the confidence radius");
  cmd->add_option("--tau", o.tau, "ALB-Norm exploration half-length (default tau_min)");
  cmd->add_option("--theta-norm", o.theta_norm, "||theta*||");
  cmd->add_option("--psi", o.psi, "||theta* - shift|| for shift-analysis");
  cmd->add_option("--frame", o.frame, "restored or residual");
  cmd->add_option("--trials", o.trials, "number of trials");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all)");
}

lrscb::ExperimentConfig resolve(const Overrides& o) {
  lrscb::ExperimentConfig config;
  if (!o.config.empty()) config = lrscb::load_config_file(o.config);
  const std::pair<const char*, const std::string*> flags[] = {
      {"algo", &o.algo},   {"d", &o.d},           {"k", &o.k},
      {"t", &o.t},         {"t1", &o.t1},         {"delta", &o.delta},
      {"sigma", &o.sigma}, {"c", &o.c},           {"lambda", &o.lambda},
      {"radius-scale", &o.radius_scale},          {"tau", &o.tau},
      {"theta-norm", &o.theta_norm},              {"psi", &o.psi},
      {"frame", &o.frame}, {"trials", &o.trials}, {"seed", &o.seed},
      {"out", &o.out},     {"threads", &o.threads}};
  for (const auto& [key, value] : flags)
    if (!value->empty()) lrscb::apply_setting(config, key, *value);
  return config;
}

void print_fit(const char* label, const std::optional<lrscb::LineFit>& fit) {
  if (!fit) {
    std::printf("  %-22s insufficient data\n", label);
    return;
  }
  std::printf("  %-22s slope %.4f  intercept %.4f  r2 %.4f%s\n", label, fit->slope, fit->intercept, fit->r2,
              fit->r2 < lrscb::kLinearityR2 ? "  (non-linear)" : "");
}

int cmd_run(const Overrides& o) {
  const lrscb::ExperimentConfig config = resolve(o);
  const lrscb::ExperimentResult result = lrscb::run_experiment(config);
  for (const lrscb::CurveSummary& s : result.curves) {
    std::printf("%s: final regret %.3f +- %.3f over %d trials\n", s.algorithm.c_str(), s.final_point().mean,
                s.final_point().stderr_, config.trials);
    print_fit("log R vs log t", s.loglog);
    print_fit("log R vs log log t", s.logloglog);
  }
  if (!config.out.empty()) std::printf("wrote %s/regret.csv and %s/summary.json\n", config.out.c_str(), config.out.c_str());
  return kExitOk;
}

int cmd_slope(const std::string& csv_path, lrscb::Round t_min) {
  std::ifstream in(csv_path);
  if (!in) throw lrscb::ConfigError("cannot read " + csv_path, "csv");
  const lrscb::CsvCurves curves = lrscb::read_regret_csv(in);
  for (const std::string& algo : curves.algorithms) {
    const auto& pts = curves.curves.at(algo);
    std::printf("%s: final mean %.3f at t=%llu\n", algo.c_str(), pts.back().mean,
                static_cast<unsigned long long>(pts.back().t));
    std::optional<lrscb::LineFit> loglog, logloglog;
    try {
      loglog = lrscb::fit_loglog_slope(pts, t_min);
      logloglog = lrscb::fit_logloglog_slope(pts, t_min);
    } catch (const lrscb::InsufficientData& e) {
      std::printf("  %s\n", e.what());
    }
    print_fit("log R vs log t", loglog);
    print_fit("log R vs log log t", logloglog);
  }
  return kExitOk;
}

struct ShiftVerifyOptions {
  int d = 20, k = 20, trials = 50;
  double psi = 0.1, radius_scale = 1.0, min_frequency = 0.9, theta_norm = 1.0;
  lrscb::Round t = 10000;
  std::uint64_t seed = 1;
  std::uint64_t samples = 10000;
};

int cmd_shift_verify(const ShiftVerifyOptions& v) {
  lrscb::ShiftExperimentConfig config;
  config.dim = v.d;
  config.num_arms = v.k;
  config.psi = v.psi;
  config.theta_norm = v.theta_norm;
  config.horizon = v.t;
  config.trials = v.trials;
  config.base_seed = v.seed;
  config.oful.radius_scale = v.radius_scale;
  if (!config.in_dominance_regime()) std::printf("note: psi is outside the regime psi < 1/(2 sqrt 2)\n");
  const lrscb::DominanceSummary summary = lrscb::shift_dominance_frequency(config);
  int violations = 0;
  double mean_true = 0.0, mean_shifted = 0.0;
  for (const auto& r : summary.runs) {
    if (!lrscb::decomposition_holds(r)) ++violations;
    mean_true += r.r_true / summary.trials;
    mean_shifted += r.r_shifted / summary.trials;
  }
  const lrscb::ShiftTrial first = lrscb::make_shift_trial(config, 0);
  const double coincidence = lrscb::coincidence_probability(
      first.env.law(), first.env.instance().theta_star, first.gamma, v.k, v.samples,
      lrscb::CounterStream(v.seed, lrscb::StreamTag::audit));
  std::printf("decomposition R_true <= R_shifted + correction: %d violations in %d trials\n", violations,
              summary.trials);
  std::printf("dominance frequency P(R_true <= R_shifted): %.4f (threshold %.2f)\n", summary.frequency,
              v.min_frequency);
  std::printf("mean R_true %.3f  mean R_shifted %.3f\n", mean_true, mean_shifted);
  std::printf("argmax coincidence frequency (trial 0 instance, %llu samples): %.4f\n",
              static_cast<unsigned long long>(v.samples), coincidence);
  const bool ok = violations == 0 && summary.frequency >= v.min_frequency;
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_audit(int d, double c, double declared, std::uint64_t n, std::uint64_t seed) {
  lrscb::ContextLaw law = lrscb::ContextLaw::uniform_box(d, c);
  if (declared > 0.0) law.declared_rho_min = declared;
  const lrscb::AuditResult r =
      lrscb::covariance_floor_audit(law, n, lrscb::CounterStream(seed, lrscb::StreamTag::audit));
  std::printf("declared rho_min %.6g  empirical lambda_min %.6g  ratio %.4f  %s\n", law.declared_rho_min,
              r.empirical_floor, r.empirical_floor / law.declared_rho_min, r.pass ? "PASS" : "FAIL");
  return r.pass ? kExitOk : kExitCheckFailed;
}

int cmd_bound_curve(int d, int k, double c, double delta, double c2, lrscb::Round from, lrscb::Round to) {
  if (from < 3 || to < from) throw lrscb::ConfigError("need 3 <= t-from <= t-to", "t-from");
  const double rho = c * c / (3.0 * d);
  std::printf("T,in_regime,lambda_factor,log_factor,bound,theoretical_t1\n");
  for (long double t = static_cast<long double>(from); t <= static_cast<long double>(to) * (1 + 1e-12L); t *= 10) {
    const auto T = static_cast<lrscb::Round>(t);
    const lrscb::BoundCurvePoint p = lrscb::bound_curve_eval(d, rho, k, T, delta, c2);
    std::printf("%llu,%d,%.6g,%.6g,%.6g,%.6g\n", static_cast<unsigned long long>(T), p.in_regime ? 1 : 0,
                p.lambda_factor, p.log_factor, p.value, lrscb::theoretical_T1(d, rho, k, T, delta));
  }
  if (!lrscb::dimension_condition_holds(d, k, to, delta))
    std::fprintf(stderr, "warning: d >= (ln T / ln ln T) ln(K^2/delta) fails at T = %llu\n",
                 static_cast<unsigned long long>(to));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epoch-based shifted contextual linear bandits: experiments and checks"};
  app.require_subcommand(1);

  Overrides run_opts;
  CLI::App* run = app.add_subcommand("run", "run an experiment and write regret.csv / summary.json");
  add_experiment_flags(run, run_opts);

  std::string csv_path;
  lrscb::Round t_min = lrscb::kDefaultSlopeTMin;
  CLI::App* slope = app.add_subcommand("slope", "fit regret slopes from a regret CSV");
  slope->add_option("--csv", csv_path, "regret CSV written by run")->required();
  slope->add_option("--t-min", t_min, "smallest checkpoint used by the fits");

  ShiftVerifyOptions sv;
  CLI::App* shift = app.add_subcommand("shift-verify", "check the shift decomposition and dominance frequency");
  shift->add_option("--d", sv.d);
  shift->add_option("--k", sv.k);
  shift->add_option("--t", sv.t);
  shift->add_option("--psi", sv.psi);
  shift->add_option("--theta-norm", sv.theta_norm);
  shift->add_option("--trials", sv.trials);
  shift->add_option("--seed", sv.seed);
  shift->add_option("--radius-scale", sv.radius_scale);
  shift->add_option("--samples", sv.samples, "context sets for the coincidence estimate");
  shift->add_option("--min-frequency", sv.min_frequency);

  int audit_d = 20;
  double audit_c = 1.0, audit_declared = 0.0;
  std::uint64_t audit_n = 0, audit_seed = 1;
  CLI::App* audit = app.add_subcommand("audit-contexts", "empirical covariance floor of the uniform-box law");
  audit->add_option("--d", audit_d);
  audit->add_option("--c", audit_c);
  audit->add_option("--rho-min", audit_declared, "declared floor (default c^2/(3d))");
  audit->add_option("--n", audit_n, "samples (default 10 d^2)");
  audit->add_option("--seed", audit_seed);

  int bc_d = 20, bc_k = 20;
  double bc_c = 1.0, bc_delta = 0.1, bc_c2 = 1.0;
  lrscb::Round bc_from = 1000, bc_to = 100000000;
  CLI::App* bound = app.add_subcommand("bound-curve", "theoretical regret bound over a decade grid of T");
  bound->add_option("--d", bc_d);
  bound->add_option("--k", bc_k);
  bound->add_option("--c", bc_c);
  bound->add_option("--delta", bc_delta);
  bound->add_option("--c2", bc_c2);
  bound->add_option("--t-from", bc_from);
  bound->add_option("--t-to", bc_to);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*slope) return cmd_slope(csv_path, t_min);
    if (*shift) return cmd_shift_verify(sv);
    if (*audit) {
      if (audit_n == 0) audit_n = 10ull * static_cast<std::uint64_t>(audit_d) * static_cast<std::uint64_t>(audit_d);
      return cmd_audit(audit_d, audit_c, audit_declared, audit_n, audit_seed);
    }
    if (*bound) return cmd_bound_curve(bc_d, bc_k, bc_c, bc_delta, bc_c2, bc_from, bc_to);
  } catch (const lrscb::ConfigError& e) {
    std::cerr << "configuration error";
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const lrscb::InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
