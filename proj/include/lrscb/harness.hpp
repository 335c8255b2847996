#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrscb/alb_norm.hpp"
#include "lrscb/bandit_core.hpp"
#include "lrscb/env.hpp"
#include "lrscb/error.hpp"
#include "lrscb/lr_scb.hpp"
#include "lrscb/oful.hpp"
#include "lrscb/rng.hpp"
#include "lrscb/shift_analysis.hpp"
#include "lrscb/slope_fit.hpp"

namespace lrscb {

enum class Algorithm { oful, alb_norm, lr_scb, shift_analysis };

inline std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::oful: return "oful";
    case Algorithm::alb_norm: return "alb-norm";
    case Algorithm::lr_scb: return "lr-scb";
    case Algorithm::shift_analysis: return "shift-analysis";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::oful, Algorithm::alb_norm, Algorithm::lr_scb, Algorithm::shift_analysis})
    if (algorithm_name(a) == name) return a;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'", "algo");
}

inline std::string_view frame_name(ShiftFrame f) noexcept {
  return f == ShiftFrame::restored ? "restored" : "residual";
}

inline ShiftFrame parse_frame(std::string_view name) {
  if (name == "restored") return ShiftFrame::restored;
  if (name == "residual") return ShiftFrame::residual;
  throw ConfigError("unknown shift frame '" + std::string(name) + "'", "frame");
}

struct ExperimentConfig {
  std::vector<Algorithm> algorithms{Algorithm::oful};
  int d = 20;
  int k = 20;
  Round t = 1000000;
  Round t1 = 0;  // 0 selects ceil(sqrt(T))
  double delta = 0.1;
  double sigma = 1.0;
  double c = 1.0;
  double lambda = 1.0;
  double radius_scale = 1.0;
  Round tau = 0;  // 0 selects tau_min
  double theta_norm = 1.0;
  double psi = 0.1;  // ||theta* - Γ|| for shift-analysis
  ShiftFrame frame = ShiftFrame::restored;
  int trials = 50;
  std::uint64_t base_seed = 1;
  int threads = 1;  // 0 uses every hardware thread
  std::string out;

  Round first_length() const { return t1 > 0 ? t1 : default_first_length(t); }

  double rho_min() const { return c * c / (3.0 * d); }

  void validate() const {
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required", "algo");
    if (d < 1) throw ConfigError("d must be positive", "d");
    if (k < 2) throw ConfigError("K must be at least 2", "k");
    if (t < 1) throw ConfigError("T must be positive", "t");
    if (first_length() > t) throw ConfigError("T must be at least T_1", "t1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)", "delta");
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative", "sigma");
    if (!(c > 0.0)) throw ConfigError("c must be positive", "c");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive", "lambda");
    if (!(radius_scale > 0.0)) throw ConfigError("radius scale must be positive", "radius-scale");
    if (!(theta_norm >= 0.0 && theta_norm <= 1.0)) throw ConfigError("theta norm must lie in [0, 1]", "theta-norm");
    if (!(psi >= 0.0)) throw ConfigError("psi must be nonnegative", "psi");
    if (trials < 1) throw ConfigError("trials must be at least 1", "trials");
    if (threads < 0) throw ConfigError("threads must be nonnegative", "threads");
    for (Algorithm a : algorithms) {
      if (a == Algorithm::lr_scb) {
        const EpochPlan plan = build_epoch_plan(t, first_length(), delta);
        AlbParams alb;
        alb.tau = tau;
        check_epoch_plan(plan, alb, rho_min(), d);
      }
      if (a == Algorithm::alb_norm) {
        const Round resolved = tau > 0 ? tau : tau_min(rho_min(), d, t, delta);
        if (t < 2 * resolved + 1) throw ConfigError("ALB-Norm needs T >= 2 tau + 1", "tau");
      }
    }
  }
};

// --- flat key = value configuration -------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec == std::errc() && ptr == end) return out;
  if constexpr (std::is_integral_v<T>) {
    // accept integral values written in floating notation such as 1e6
    double d = 0.0;
    auto [p2, e2] = std::from_chars(value.data(), end, d);
    if (e2 == std::errc() && p2 == end && d >= 0.0 && d == std::floor(d) && d < 9.2e18) return static_cast<T>(d);
  }
  throw ConfigError("invalid value '" + value + "' for " + key, key);
}

}  // namespace detail

inline std::vector<Algorithm> parse_algorithm_list(std::string_view list) {
  std::vector<Algorithm> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string item = detail::trim(list.substr(start, comma - start));
    if (!item.empty()) out.push_back(parse_algorithm(item));
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty algorithm list", "algo");
  return out;
}

inline void apply_setting(ExperimentConfig& config, const std::string& raw_key, const std::string& value) {
  const std::string key = detail::normalize_key(raw_key);
  using detail::parse_number;
  if (key == "algo" || key == "algorithm") config.algorithms = parse_algorithm_list(value);
  else if (key == "d") config.d = parse_number<int>(key, value);
  else if (key == "k") config.k = parse_number<int>(key, value);
  else if (key == "t") config.t = parse_number<Round>(key, value);
  else if (key == "t1") config.t1 = parse_number<Round>(key, value);
  else if (key == "delta") config.delta = parse_number<double>(key, value);
  else if (key == "sigma") config.sigma = parse_number<double>(key, value);
  else if (key == "c") config.c = parse_number<double>(key, value);
  else if (key == "lambda") config.lambda = parse_number<double>(key, value);
  else if (key == "radius-scale") config.radius_scale = parse_number<double>(key, value);
  else if (key == "tau") config.tau = parse_number<Round>(key, value);
  else if (key == "theta-norm") config.theta_norm = parse_number<double>(key, value);
  else if (key == "psi") config.psi = parse_number<double>(key, value);
  else if (key == "frame") config.frame = parse_frame(value);
  else if (key == "trials") config.trials = parse_number<int>(key, value);
  else if (key == "seed") config.base_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") config.threads = parse_number<int>(key, value);
  else if (key == "out") config.out = value;
  else throw ConfigError("unknown configuration key '" + raw_key + "'", raw_key);
}

// Lines of `key = value`; blank lines and text after '#' are ignored.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value", "config");
    std::string key = detail::trim(std::string_view(body).substr(0, eq));
    std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": missing key", "config");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

inline void apply_config_text(ExperimentConfig& config, std::string_view text) {
  for (const auto& [key, value] : parse_config_text(text)) apply_setting(config, key, value);
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), "config");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(base, buffer.str());
  return base;
}

// --- trials -------------------------------------------------------------

inline Environment trial_environment(const ExperimentConfig& config, int trial) {
  return random_instance_environment(config.d, config.k, config.sigma, config.c, config.theta_norm,
                                     trial_seed(config.base_seed, static_cast<std::uint64_t>(trial)));
}

// Cumulative true pseudo-regret at every checkpoint of one run.
inline std::vector<double> run_trial(const ExperimentConfig& config, Algorithm algorithm, int trial) {
  const Environment env = trial_environment(config, trial);
  OfulParams oful;
  oful.norm_bound = 1.0;
  oful.delta = config.delta;
  oful.ridge_lambda = config.lambda;
  oful.radius_scale = config.radius_scale;
  oful.frame = config.frame;
  AlbParams alb;
  alb.tau = config.tau;
  alb.ridge_lambda = config.lambda;
  alb.radius_scale = config.radius_scale;
  alb.frame = config.frame;

  RegretTrace trace;
  switch (algorithm) {
    case Algorithm::oful:
      trace = oful_run(env, oful, config.t).true_trace;
      break;
    case Algorithm::alb_norm:
      trace = alb_run(env, alb, config.t, config.delta, Vector::Zero(config.d)).run.true_trace;
      break;
    case Algorithm::lr_scb: {
      LrScbParams params;
      params.horizon = config.t;
      params.first_length = config.first_length();
      params.delta = config.delta;
      params.alb = alb;
      params.ridge_lambda = config.lambda;
      params.radius_scale = config.radius_scale;
      params.frame = config.frame;
      trace = lr_scb_run(env, params).trace;
      break;
    }
    case Algorithm::shift_analysis: {
      const CounterStream stream(env.seed(), StreamTag::instance);
      const Vector gamma = shift_at_distance(env.instance().theta_star, config.psi,
                                             random_unit_vector(config.d, stream, kShiftDirectionCounter));
      trace = oful_run(env, oful, config.t, gamma).true_trace;
      break;
    }
  }
  std::vector<double> values;
  values.reserve(trace.checkpoints().size());
  for (const auto& cp : trace.checkpoints()) values.push_back(cp.cumulative);
  return values;
}

// Runs task(i) for i in [0, count) on `threads` workers and rethrows the
// failure of the lowest failing index.
template <typename Task>
void parallel_for(int count, int threads, Task&& task) {
  if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max(count, 1));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// --- summaries ----------------------------------------------------------

struct CurveSummary {
  std::string algorithm;
  std::vector<CurvePoint> points;
  std::optional<LineFit> loglog;
  std::optional<LineFit> logloglog;

  const CurvePoint& final_point() const { return points.back(); }
};

inline CurveSummary summarize_curve(std::string algorithm, const std::vector<Round>& grid,
                                    const std::vector<std::vector<double>>& per_trial, Round t_min) {
  CurveSummary s;
  s.algorithm = std::move(algorithm);
  const double n = static_cast<double>(per_trial.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double sum = 0.0;
    for (const auto& trial : per_trial) sum += trial[j];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& trial : per_trial) ss += (trial[j] - mean) * (trial[j] - mean);
    const double se = per_trial.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    s.points.push_back({grid[j], mean, se});
  }
  try {
    s.loglog = fit_loglog_slope(s.points, t_min);
  } catch (const InsufficientData&) {
  }
  try {
    s.logloglog = fit_logloglog_slope(s.points, t_min);
  } catch (const InsufficientData&) {
  }
  return s;
}

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<Round> grid;
  // values[a][trial][j]: cumulative regret of algorithm a at grid[j].
  std::vector<std::vector<std::vector<double>>> values;
  std::vector<CurveSummary> curves;

  const CurveSummary& curve(Algorithm a) const {
    for (std::size_t i = 0; i < config.algorithms.size(); ++i)
      if (config.algorithms[i] == a) return curves[i];
    throw ConfigError("algorithm not part of the experiment", "algo");
  }
};

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_csv(const ExperimentResult& result, std::ostream& out) {
  out << "trial,algorithm,t,cum_regret\n";
  for (std::size_t a = 0; a < result.config.algorithms.size(); ++a) {
    const std::string_view name = algorithm_name(result.config.algorithms[a]);
    for (std::size_t trial = 0; trial < result.values[a].size(); ++trial)
      for (std::size_t j = 0; j < result.grid.size(); ++j)
        out << trial << ',' << name << ',' << result.grid[j] << ',' << format_double(result.values[a][trial][j])
            << '\n';
  }
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json algos = nlohmann::ordered_json::array();
  for (Algorithm a : c.algorithms) algos.push_back(std::string(algorithm_name(a)));
  j["algorithms"] = algos;
  j["d"] = c.d;
  j["k"] = c.k;
  j["t"] = c.t;
  j["t1"] = c.first_length();
  j["delta"] = c.delta;
  j["sigma"] = c.sigma;
  j["c"] = c.c;
  j["rho_min"] = c.rho_min();
  j["lambda"] = c.lambda;
  j["radius_scale"] = c.radius_scale;
  j["tau"] = c.tau;
  j["theta_norm"] = c.theta_norm;
  j["psi"] = c.psi;
  j["frame"] = std::string(frame_name(c.frame));
  j["trials"] = c.trials;
  j["seed"] = c.base_seed;
  j["checkpoints"] = "powers of two and T";
  return j;
}

inline nlohmann::ordered_json fit_json(const std::optional<LineFit>& fit) {
  if (!fit) return nullptr;
  nlohmann::ordered_json j;
  j["slope"] = fit->slope;
  j["intercept"] = fit->intercept;
  j["r2"] = fit->r2;
  j["points"] = fit->points;
  j["linear"] = fit->r2 >= kLinearityR2;
  return j;
}

inline nlohmann::ordered_json summary_json(const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["config"] = config_json(result.config);
  j["slope_t_min"] = kDefaultSlopeTMin;
  nlohmann::ordered_json curves = nlohmann::ordered_json::array();
  for (const CurveSummary& s : result.curves) {
    nlohmann::ordered_json c;
    c["algorithm"] = s.algorithm;
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const CurvePoint& p : s.points) pts.push_back({{"t", p.t}, {"mean", p.mean}, {"stderr", p.stderr_}});
    c["checkpoints"] = pts;
    c["final_mean"] = s.final_point().mean;
    c["final_stderr"] = s.final_point().stderr_;
    c["loglog_slope"] = fit_json(s.loglog);
    c["logloglog_slope"] = fit_json(s.logloglog);
    curves.push_back(c);
  }
  j["curves"] = curves;
  return j;
}

// Writes regret.csv and summary.json into `dir`, creating it if needed.
inline void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream csv(dir / "regret.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + (dir / "regret.csv").string());
  write_csv(result, csv);
  std::ofstream json(dir / "summary.json", std::ios::binary);
  if (!json) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  json << summary_json(result).dump(2) << '\n';
  if (!csv || !json) throw std::runtime_error("write failure in " + dir.string());
}

// `trials` independent runs per algorithm with seeds base_seed + trial,
// merged in trial order so every output byte is independent of `threads`.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.grid = checkpoint_grid(config.t);
  const std::size_t algos = config.algorithms.size();
  result.values.assign(algos, std::vector<std::vector<double>>(static_cast<std::size_t>(config.trials)));
  const int tasks = static_cast<int>(algos) * config.trials;
  parallel_for(tasks, config.threads, [&](int i) {
    const auto a = static_cast<std::size_t>(i / config.trials);
    const int trial = i % config.trials;
    result.values[a][static_cast<std::size_t>(trial)] = run_trial(config, config.algorithms[a], trial);
  });
  for (std::size_t a = 0; a < algos; ++a)
    result.curves.push_back(summarize_curve(std::string(algorithm_name(config.algorithms[a])), result.grid,
                                            result.values[a], kDefaultSlopeTMin));
  if (!config.out.empty()) write_outputs(result, config.out);
  return result;
}

// --- reading persisted traces -------------------------------------------

struct CsvCurves {
  std::vector<std::string> algorithms;
  std::map<std::string, std::vector<CurvePoint>> curves;
};

// Rebuilds per-algorithm mean curves from a regret CSV.
inline CsvCurves read_regret_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "trial,algorithm,t,cum_regret")
    throw ConfigError("regret CSV must start with the header trial,algorithm,t,cum_regret", "csv");
  // algorithm -> t -> values
  std::map<std::string, std::map<Round, std::vector<double>>> data;
  CsvCurves out;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
    if (fields.size() != 4) throw ConfigError("line " + std::to_string(number) + ": expected 4 fields", "csv");
    const Round t = detail::parse_number<Round>("csv", fields[2]);
    const double v = detail::parse_number<double>("csv", fields[3]);
    if (!data.contains(fields[1])) out.algorithms.push_back(fields[1]);
    data[fields[1]][t].push_back(v);
  }
  for (const auto& [algo, by_t] : data) {
    std::vector<CurvePoint>& pts = out.curves[algo];
    for (const auto& [t, values] : by_t) {
      const double n = static_cast<double>(values.size());
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      pts.push_back({t, mean, values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0});
    }
  }
  return out;
}

}  // namespace lrscb
