/*
 * cli.hpp - command-line front end.
 *
 *   theory    constants m_star, K(R), D(R) and the limit law for (beta, R)
 *   simulate  ensemble of exit times -> CSV + JSON manifest
 *   theta     simulate --mode theta
 *   analyze   goodness of fit of a sample CSV against its limit law
 *   scaling   mean exit time over several N and the OLS slope against ln N
 *
 * Exit codes: 0 success, 1 assertion failed, 2 usage/config error, 3 I/O error.
 * Settings resolve as command-line flag > --config JSON > CW_THREADS (threads
 * only) > built-in default.
 */
#pragma once

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwexit/errors.hpp"
#include "cwexit/io.hpp"
#include "cwexit/model.hpp"
#include "cwexit/sim.hpp"
#include "cwexit/stats.hpp"
#include "cwexit/theory.hpp"

namespace cwexit::cli {

enum ExitCode : int { kOk = 0, kAssertionFailed = 1, kUsage = 2, kIo = 3 };

namespace detail {

inline unsigned env_threads() {
  const char* env = std::getenv("CW_THREADS");
  if (env == nullptr || *env == '\0') return default_worker_count();
  unsigned value = 0;
  const std::string_view text(env);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
    throw config_error("CW_THREADS must be a positive integer");
  }
  return value;
}

struct ThresholdFlags {
  double r = 0.0;
  double r_frac = 0.5;
  CLI::Option* r_opt = nullptr;
  CLI::Option* r_frac_opt = nullptr;

  void add_to(CLI::App& cmd) {
    r_opt = cmd.add_option("--r", r, "absolute threshold R in (0, m_star)");
    r_frac_opt = cmd.add_option("--r-frac", r_frac, "threshold as a fraction of m_star (default 0.5)");
    r_opt->excludes(r_frac_opt);
  }

  ThresholdSpec spec(const nlohmann::json* config) const {
    if (r_opt->count() > 0) return AbsoluteRadius{r};
    if (r_frac_opt->count() > 0) return MStarFraction{r_frac};
    if (config != nullptr) {
      if (config->contains("r") && !(*config)["r"].is_null()) return AbsoluteRadius{(*config)["r"].get<double>()};
      if (config->contains("r_frac") && !(*config)["r_frac"].is_null()) {
        return MStarFraction{(*config)["r_frac"].get<double>()};
      }
    }
    return MStarFraction{r_frac};
  }
};

inline double resolve_radius(double beta, const ThresholdSpec& spec) {
  const double m_star = solve_m_star(beta);
  double r = 0.0;
  if (const auto* abs_r = std::get_if<AbsoluteRadius>(&spec)) {
    r = abs_r->r;
  } else if (const auto* frac = std::get_if<MStarFraction>(&spec)) {
    if (!(frac->fraction > 0.0 && frac->fraction < 1.0)) throw config_error("--r-frac must lie in (0, 1)");
    r = frac->fraction * m_star;
  }
  if (!(r > 0.0 && r < m_star)) {
    throw config_error("R must lie in (0, m_star) = (0, " + io::format_double(m_star) + ")");
  }
  return r;
}

inline void require_double_well(double beta) {
  if (!(beta > 1.0)) throw config_error("no double well: beta must exceed 1");
}

struct SimulateFlags {
  double beta = 0.0;
  std::int64_t n = 0;
  std::string mode = "tau";
  double gamma = 0.0;
  std::uint64_t samples = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double max_time = 0.0;
  std::string out;
  std::string manifest;
  std::string config;
  ThresholdFlags threshold;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* max_time_opt = nullptr;

  void add_to(CLI::App& cmd, bool theta_alias) {
    beta_opt = cmd.add_option("--beta", beta, "inverse temperature (> 1)");
    n_opt = cmd.add_option("--n", n, "number of spins (even)");
    if (!theta_alias) mode_opt = cmd.add_option("--mode", mode, "tau (fixed R) or theta (N^-gamma ball)");
    gamma_opt = cmd.add_option("--gamma", gamma, "shrinking-ball exponent in (1/4, 1/2), theta mode");
    threshold.add_to(cmd);
    samples_opt = cmd.add_option("--samples", samples, "number of trajectories (default 1000)");
    seed_opt = cmd.add_option("--seed", seed, "master seed (default 0)");
    threads_opt = cmd.add_option("--threads", threads, "worker threads (default: CW_THREADS or all cores)");
    max_time_opt = cmd.add_option("--max-time", max_time, "per-trajectory time cap");
    cmd.add_option("--out,-o", out, "output CSV path")->required();
    cmd.add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
    cmd.add_option("--config", config, "JSON config or manifest to start from");
  }
};

template <class T>
T pick(const CLI::Option* opt, const T& flag_value, const nlohmann::json* config, const char* key,
       std::optional<T> fallback) {
  if (opt != nullptr && opt->count() > 0) return flag_value;
  if (config != nullptr && config->contains(key) && !(*config)[key].is_null()) {
    try {
      return (*config)[key].get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw format_error(std::string("config key '") + key + "': " + e.what());
    }
  }
  if (fallback) return *fallback;
  throw config_error(std::string("missing required setting '") + key + "'");
}

inline int run_simulate(SimulateFlags& f, bool theta_alias, std::ostream& out) {
  std::optional<nlohmann::json> config;
  if (!f.config.empty()) config = io::read_json_file(f.config);
  const nlohmann::json* cfg = config ? &*config : nullptr;

  const double beta = pick<double>(f.beta_opt, f.beta, cfg, "beta", std::nullopt);
  const auto n = pick<std::int64_t>(f.n_opt, f.n, cfg, "n", std::nullopt);
  std::string mode_text = theta_alias ? "theta" : pick<std::string>(f.mode_opt, f.mode, cfg, "mode", "tau");
  const ExitMode mode = io::parse_mode(mode_text);
  const auto samples = pick<std::uint64_t>(f.samples_opt, f.samples, cfg, "samples", 1000);
  std::uint64_t seed = 0;
  if (f.seed_opt->count() > 0) {
    seed = f.seed;
  } else if (cfg != nullptr && cfg->contains("master_seed")) {
    seed = pick<std::uint64_t>(nullptr, 0, cfg, "master_seed", 0);
  } else {
    seed = pick<std::uint64_t>(nullptr, 0, cfg, "seed", 0);
  }
  const auto threads = pick<unsigned>(f.threads_opt, f.threads, cfg, "threads", env_threads());
  if (threads == 0) throw config_error("--threads must be positive");

  require_double_well(beta);
  const ModelParams params(beta, n);
  SimConfig sim{params, mode, MStarFraction{0.5}, std::nullopt, false};
  if (mode == ExitMode::tau) {
    if (f.gamma_opt->count() > 0) throw config_error("--gamma applies to theta mode only");
    sim.threshold = AbsoluteRadius{resolve_radius(beta, f.threshold.spec(cfg))};
  } else {
    if (f.threshold.r_opt->count() > 0 || f.threshold.r_frac_opt->count() > 0) {
      throw config_error("--r/--r-frac apply to tau mode only");
    }
    sim.threshold = BallExponent{pick<double>(f.gamma_opt, f.gamma, cfg, "gamma", std::nullopt)};
  }
  if (f.max_time_opt->count() > 0 || (cfg != nullptr && cfg->contains("max_time"))) {
    sim.max_time = pick<double>(f.max_time_opt, f.max_time, cfg, "max_time", std::nullopt);
  }
  if (samples == 0) throw config_error("--samples must be at least 1");

  const ExitSampler probe(sim);  // validates the full configuration before any work
  const ResolvedThreshold threshold = probe.threshold();
  const EnsembleResult ensemble = run_ensemble(sim, seed, samples, threads);

  const double gamma = mode == ExitMode::theta ? threshold.gamma : 0.0;
  const double centering = time_centering(mode, params, gamma);
  std::ostringstream csv;
  io::write_samples_csv(csv, ensemble, centering);
  io::write_text_file(f.out, csv.str());

  io::RunManifest manifest;
  manifest.subcommand = theta_alias ? "theta" : "simulate";
  manifest.beta = beta;
  manifest.n = n;
  manifest.mode = mode;
  if (mode == ExitMode::tau) {
    manifest.r = threshold.radius;
  } else {
    manifest.gamma = threshold.gamma;
  }
  manifest.n_thr = threshold.n_threshold;
  manifest.samples = samples;
  manifest.master_seed = seed;
  manifest.threads = threads;
  manifest.max_time = probe.max_time();
  manifest.timestamp = io::utc_timestamp();
  const std::string manifest_path = f.manifest.empty() ? f.out + ".manifest.json" : f.manifest;
  io::write_text_file(manifest_path, io::to_json(manifest).dump(2) + "\n");

  const auto truncated = std::count_if(ensemble.samples.begin(), ensemble.samples.end(),
                                       [](const ExitSample& s) { return s.truncated; });
  out << "wrote " << samples << " samples to " << f.out << " (n_thr=" << threshold.n_threshold
      << ", truncated=" << truncated << ", " << std::fixed << std::setprecision(2) << ensemble.wall_time
      << " s)\n";
  out.unsetf(std::ios::floatfield);
  return kOk;
}

struct TheoryFlags {
  double beta = 0.0;
  ThresholdFlags threshold;
};

inline int run_theory(const TheoryFlags& f, std::ostream& out) {
  require_double_well(f.beta);
  const double r = resolve_radius(f.beta, f.threshold.spec(nullptr));
  const TheoryConstants c = theory_constants(f.beta, r);
  const LimitLaw law = c.law();
  const LimitLaw theta = theta_limit_law(f.beta);

  nlohmann::json j;
  j["beta"] = c.beta;
  j["a"] = c.a;
  j["m_star"] = c.m_star;
  j["m_star_residual"] = std::abs(c.beta * c.m_star - std::atanh(c.m_star));
  j["R"] = c.r_threshold;
  j["K_R"] = c.k_of_r;
  j["D_R"] = c.d_of_r;
  j["limit_mean"] = limit_mean(law);
  nlohmann::json quantiles = nlohmann::json::array();
  for (double q : {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95}) {
    quantiles.push_back({{"q", q}, {"t", limit_quantile(q, law)}});
  }
  j["limit_quantiles"] = quantiles;
  j["tau_law"] = io::to_json(law);
  j["theta_law"] = io::to_json(theta);
  j["theta_limit_mean"] = limit_mean(theta);
  out << j.dump(2) << '\n';
  return kOk;
}

struct AnalyzeFlags {
  std::string file;
  std::string manifest;
  std::string report;
  std::string format = "table";
  double assert_ks = 0.0;
  CLI::Option* assert_opt = nullptr;
};

inline void print_report(std::ostream& out, const GofReport& r, const LimitLaw& law) {
  out << std::setprecision(6);
  out << "samples            " << r.n << " (truncated excluded: " << r.truncated << ")\n";
  out << "limit law          a=" << law.a << " shift=" << law.shift << " sigma=" << law.sigma << '\n';
  out << "KS distance        " << r.ks_distance << "  (p=" << r.ks_pvalue << ")\n";
  out << "sign fraction (+)  " << r.sign_fraction_plus << "  (z=" << r.sign_zscore << ")\n";
  out << "mean               " << r.mean_empirical << " +- " << r.stderr_empirical << "  (theory "
      << r.mean_theoretical << ")\n";
  out << "\n     q   empirical  theoretical\n";
  for (const auto& row : r.quantiles) {
    out << std::setw(6) << row.q << std::setw(12) << row.empirical << std::setw(13) << row.theoretical << '\n';
  }
}

inline int run_analyze(const AnalyzeFlags& f, std::ostream& out, std::ostream& err) {
  std::ifstream in(f.file);
  if (!in) throw io_error("cannot open '" + f.file + "'");
  const auto rows = io::read_samples_csv(in);
  if (rows.empty()) throw format_error("sample file has no rows");

  const std::string manifest_path = f.manifest.empty() ? f.file + ".manifest.json" : f.manifest;
  const io::RunManifest m = io::manifest_from_json(io::read_json_file(manifest_path));
  require_double_well(m.beta);
  const ModelParams params(m.beta, m.n);

  LimitLaw law;
  double gamma = 0.0;
  if (m.mode == ExitMode::tau) {
    if (!m.r) throw format_error("manifest: tau mode needs 'r'");
    law = tau_limit_law(m.beta, *m.r);
  } else {
    if (!m.gamma) throw format_error("manifest: theta mode needs 'gamma'");
    gamma = *m.gamma;
    law = theta_limit_law(m.beta);
  }
  const double centering = time_centering(m.mode, params, gamma);

  std::vector<ShiftedSample> samples;
  std::size_t truncated = 0;
  for (const auto& row : rows) {
    const double expected = row.exit_time - centering;
    if (std::abs(row.shifted_time - expected) > 1e-9 * std::max(1.0, std::abs(row.exit_time))) {
      throw format_error("trajectory " + std::to_string(row.trajectory_id) +
                         ": shifted_time disagrees with the manifest's centering");
    }
    if (row.truncated) {
      ++truncated;
      continue;
    }
    samples.push_back({row.shifted_time, row.sign});
  }
  const GofReport report = gof_report(samples, law, truncated);

  nlohmann::json j = io::to_json(report);
  j["law"] = io::to_json(law);
  j["source"] = f.file;
  if (!f.report.empty()) io::write_text_file(f.report, j.dump(2) + "\n");
  if (f.format == "json") {
    out << j.dump(2) << '\n';
  } else {
    print_report(out, report, law);
  }

  if (f.assert_opt->count() > 0 && report.ks_distance > f.assert_ks) {
    err << "assertion failed: KS distance " << report.ks_distance << " exceeds " << f.assert_ks << '\n';
    return kAssertionFailed;
  }
  return kOk;
}

struct ScalingFlags {
  double beta = 0.0;
  ThresholdFlags threshold;
  std::vector<std::int64_t> n_list;
  std::uint64_t samples = 2000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string format = "table";
  std::string out;
  double slope_tol = 0.0;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* slope_opt = nullptr;
};

inline int run_scaling(const ScalingFlags& f, std::ostream& out, std::ostream& err) {
  require_double_well(f.beta);
  if (f.n_list.size() < 3) throw config_error("scaling needs at least 3 values of N");
  if (f.samples == 0) throw config_error("--samples must be at least 1");
  const unsigned threads = f.threads_opt->count() > 0 ? f.threads : env_threads();
  if (threads == 0) throw config_error("--threads must be positive");
  const double r = resolve_radius(f.beta, f.threshold.spec(nullptr));
  const double a = lyapunov(f.beta);
  const LimitLaw law = tau_limit_law(f.beta, r);

  // Validate every N before simulating any of them.
  std::vector<SimConfig> configs;
  for (const auto n : f.n_list) {
    configs.push_back({ModelParams(f.beta, n), ExitMode::tau, AbsoluteRadius{r}, std::nullopt, false});
    (void)resolve_threshold(configs.back());
  }

  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> log_n;
  std::vector<double> means;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const EnsembleResult ens = run_ensemble(configs[k], derive_seed(f.seed, k), f.samples, threads);
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t used = 0;
    for (const auto& s : ens.samples) {
      if (s.truncated) continue;
      sum += s.exit_time;
      sum_sq += s.exit_time * s.exit_time;
      ++used;
    }
    if (used < 2) throw numerical_error("scaling: fewer than two non-truncated samples");
    const double mean = sum / static_cast<double>(used);
    const double var = (sum_sq - static_cast<double>(used) * mean * mean) / static_cast<double>(used - 1);
    const double stderr_mean = std::sqrt(std::max(var, 0.0) / static_cast<double>(used));
    const double ln_n = std::log(static_cast<double>(f.n_list[k]));
    log_n.push_back(ln_n);
    means.push_back(mean);
    rows.push_back({{"n", f.n_list[k]},
                    {"n_thr", resolve_threshold(configs[k]).n_threshold},
                    {"samples", used},
                    {"mean_tau", mean},
                    {"stderr", stderr_mean},
                    {"limit_prediction", ln_n / (2.0 * a) + limit_mean(law)}});
  }
  const LinearFit fit = fit_slope(log_n, means);
  const double expected = 1.0 / (2.0 * a);

  nlohmann::json j;
  j["beta"] = f.beta;
  j["R"] = r;
  j["master_seed"] = f.seed;
  j["rows"] = rows;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["stderr_slope"] = fit.stderr_slope;
  j["expected_slope"] = expected;
  if (!f.out.empty()) io::write_text_file(f.out, j.dump(2) + "\n");

  if (f.format == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << std::setprecision(6) << "       N    n_thr     mean tau     stderr   limit pred\n";
    for (const auto& row : rows) {
      out << std::setw(8) << row["n"].get<std::int64_t>() << std::setw(9) << row["n_thr"].get<std::int64_t>()
          << std::setw(13) << row["mean_tau"].get<double>() << std::setw(11) << row["stderr"].get<double>()
          << std::setw(13) << row["limit_prediction"].get<double>() << '\n';
    }
    out << "slope vs ln N: " << fit.slope << " +- " << fit.stderr_slope << " (expected " << expected << ")\n";
  }

  if (f.slope_opt->count() > 0 && std::abs(fit.slope - expected) > f.slope_tol * expected) {
    err << "assertion failed: slope " << fit.slope << " differs from " << expected << " by more than "
        << f.slope_tol * 100.0 << "%\n";
    return kAssertionFailed;
  }
  return kOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Exit times of the Curie-Weiss magnetization chain from its unstable state"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kVersion));

  detail::TheoryFlags theory;
  auto* theory_cmd = app.add_subcommand("theory", "print theory constants and the limit law as JSON");
  theory_cmd->add_option("--beta", theory.beta, "inverse temperature (> 1)")->required();
  theory.threshold.add_to(*theory_cmd);

  detail::SimulateFlags simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate an ensemble of exit times");
  simulate.add_to(*simulate_cmd, false);

  detail::SimulateFlags theta;
  auto* theta_cmd = app.add_subcommand("theta", "simulate exits from the N^-gamma ball (simulate --mode theta)");
  theta.add_to(*theta_cmd, true);

  detail::AnalyzeFlags analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "compare a sample CSV with its limit law");
  analyze_cmd->add_option("file", analyze.file, "sample CSV")->required();
  analyze_cmd->add_option("--manifest", analyze.manifest, "manifest path (default: <file>.manifest.json)");
  analyze_cmd->add_option("--report", analyze.report, "write the JSON report here");
  analyze_cmd->add_option("--format", analyze.format, "stdout format")->check(CLI::IsMember({"table", "json"}));
  analyze.assert_opt = analyze_cmd->add_option("--assert-ks", analyze.assert_ks, "exit 1 if KS distance exceeds this");

  detail::ScalingFlags scaling;
  auto* scaling_cmd = app.add_subcommand("scaling", "mean exit time against ln N");
  scaling_cmd->add_option("--beta", scaling.beta, "inverse temperature (> 1)")->required();
  scaling.threshold.add_to(*scaling_cmd);
  scaling_cmd->add_option("--n-list", scaling.n_list, "spin counts, comma separated")->delimiter(',')->required();
  scaling_cmd->add_option("--samples", scaling.samples, "trajectories per N (default 2000)");
  scaling_cmd->add_option("--seed", scaling.seed, "master seed (default 0)");
  scaling.threads_opt = scaling_cmd->add_option("--threads", scaling.threads, "worker threads");
  scaling_cmd->add_option("--format", scaling.format, "stdout format")->check(CLI::IsMember({"table", "json"}));
  scaling_cmd->add_option("--out", scaling.out, "write the JSON result here");
  scaling.slope_opt = scaling_cmd->add_option("--assert-slope-tol", scaling.slope_tol,
                                              "exit 1 if |slope - 1/(2a)| exceeds this fraction of 1/(2a)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*theory_cmd) return detail::run_theory(theory, out);
    if (*simulate_cmd) return detail::run_simulate(simulate, false, out);
    if (*theta_cmd) return detail::run_simulate(theta, true, out);
    if (*analyze_cmd) return detail::run_analyze(analyze, out, err);
    if (*scaling_cmd) return detail::run_scaling(scaling, out, err);
  } catch (const io_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const config_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const format_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    // numerical failures and aborted ensembles: no dedicated code, report as unusable input
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace cwexit::cli
