/*
 * sim.hpp - exact event-driven simulation of the magnetization chain.
 *
 * The chain starts at n = 0 and jumps n -> n +- 2 after Exponential(lambda(n))
 * waiting times, going up with probability lambda_+(n) / lambda(n). A trajectory
 * stops at the first jump instant with |n| >= n_thr (paths are right-continuous,
 * so the exit time is that jump time) or when the clock passes max_time.
 *
 * Threshold modes:
 *   tau    n_thr = smallest even integer >= N R,   R = absolute or fraction * m_star
 *   theta  n_thr = 2 ceil(N^{1 - gamma} / 2),      1/4 < gamma < 1/2
 *
 * Ensembles are reproducible: trajectory i uses derive_seed(master, i) and its
 * own generator, so results do not depend on the worker count or scheduling.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "cwexit/errors.hpp"
#include "cwexit/model.hpp"
#include "cwexit/rng.hpp"
#include "cwexit/theory.hpp"

namespace cwexit {

enum class ExitMode { tau, theta };

inline const char* to_string(ExitMode mode) noexcept { return mode == ExitMode::tau ? "tau" : "theta"; }

struct AbsoluteRadius {
  double r;
};
struct MStarFraction {
  double fraction;
};
struct BallExponent {
  double gamma;
};
using ThresholdSpec = std::variant<AbsoluteRadius, MStarFraction, BallExponent>;

struct SimConfig {
  ModelParams params;
  ExitMode mode = ExitMode::tau;
  ThresholdSpec threshold = MStarFraction{0.5};
  std::optional<double> max_time;  ///< defaults to default_max_time(params)
  bool record_path = false;
};

struct ResolvedThreshold {
  std::int64_t n_threshold = 0;
  double radius = 0.0;  ///< R in tau mode, N^{-gamma} in theta mode
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double m_star = 0.0;
};

/// 50 ln(N) / (2a) + 100.
inline double default_max_time(const ModelParams& params) {
  const double a = lyapunov(params.beta());
  return 50.0 * std::log(static_cast<double>(params.n_spins())) / (2.0 * a) + 100.0;
}

inline ResolvedThreshold resolve_threshold(const SimConfig& config) {
  const ModelParams& p = config.params;
  if (!p.double_well()) throw config_error("no double well: exit-time experiments need beta > 1");
  ResolvedThreshold out;
  out.m_star = solve_m_star(p.beta());
  const double big_n = static_cast<double>(p.n_spins());

  if (config.mode == ExitMode::tau) {
    double r = 0.0;
    if (const auto* abs_r = std::get_if<AbsoluteRadius>(&config.threshold)) {
      r = abs_r->r;
    } else if (const auto* frac = std::get_if<MStarFraction>(&config.threshold)) {
      if (!(frac->fraction > 0.0 && frac->fraction < 1.0)) {
        throw config_error("threshold fraction of m_star must lie in (0, 1)");
      }
      r = frac->fraction * out.m_star;
    } else {
      throw config_error("tau mode takes an absolute radius or a fraction of m_star");
    }
    if (!(r > 0.0 && r < out.m_star)) {
      throw config_error("threshold R must lie in (0, m_star) = (0, " + std::to_string(out.m_star) + ")");
    }
    // Products landing within 1e-9 of a grid point count as on the grid.
    auto count = static_cast<std::int64_t>(std::ceil(big_n * r - 1e-9));
    if (count % 2 != 0) ++count;
    out.n_threshold = std::max<std::int64_t>(count, 2);
    out.radius = r;
  } else {
    const auto* exponent = std::get_if<BallExponent>(&config.threshold);
    if (exponent == nullptr) throw config_error("theta mode takes an exponent gamma");
    const double gamma = exponent->gamma;
    if (!(gamma > 0.25 && gamma < 0.5)) throw config_error("gamma must lie in (1/4, 1/2)");
    const double half_count = std::ceil(0.5 * std::pow(big_n, 1.0 - gamma));
    out.n_threshold = 2 * static_cast<std::int64_t>(half_count);
    out.radius = std::pow(big_n, -gamma);
    out.gamma = gamma;
  }
  if (out.n_threshold > p.n_spins()) throw config_error("threshold count exceeds N");
  return out;
}

inline double effective_max_time(const SimConfig& config) {
  const double cap = config.max_time.value_or(default_max_time(config.params));
  if (!(cap > 0.0)) throw config_error("max_time must be positive");
  return cap;
}

/// Deterministic centering of exit times: ln(N)/(2a) (tau) or ((1/2 - gamma)/a) ln N (theta).
inline double time_centering(ExitMode mode, const ModelParams& params, double gamma = 0.0) {
  const double a = lyapunov(params.beta());
  const double log_n = std::log(static_cast<double>(params.n_spins()));
  return mode == ExitMode::tau ? log_n / (2.0 * a) : (0.5 - gamma) / a * log_n;
}

struct RateEntry {
  double plus;
  double minus;
  double total;
  double p_plus;
  double p_minus;
  double inv_total;
};

/// Rates for every even imbalance in [-n_thr, n_thr]; entry k holds n = 2k - n_thr.
class RateTable {
 public:
  RateTable(const ModelParams& params, std::int64_t n_threshold) : n_threshold_(n_threshold) {
    if (n_threshold < 2 || n_threshold % 2 != 0 || n_threshold > params.n_spins()) {
      throw config_error("rate table: threshold must be even with 2 <= n_thr <= N");
    }
    const double big_n = static_cast<double>(params.n_spins());
    entries_.reserve(static_cast<std::size_t>(n_threshold + 1));
    for (std::int64_t n = -n_threshold; n <= n_threshold; n += 2) {
      const JumpRates r = jump_rates(static_cast<double>(n) / big_n, params);
      const double total = r.total();
      entries_.push_back({r.plus, r.minus, total, r.plus / total, r.minus / total, 1.0 / total});
    }
  }

  std::int64_t n_threshold() const noexcept { return n_threshold_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const RateEntry* data() const noexcept { return entries_.data(); }
  const RateEntry& operator[](std::size_t index) const noexcept { return entries_[index]; }

  const RateEntry& at(std::int64_t n) const {
    if (n < -n_threshold_ || n > n_threshold_ || (n + n_threshold_) % 2 != 0) {
      throw domain_error("rate table: imbalance out of range or of wrong parity");
    }
    return entries_[static_cast<std::size_t>((n + n_threshold_) / 2)];
  }

 private:
  std::int64_t n_threshold_;
  std::vector<RateEntry> entries_;
};

inline RateTable build_rate_table(const SimConfig& config) {
  return RateTable(config.params, resolve_threshold(config).n_threshold);
}

struct ExitSample {
  int sign = 1;  ///< sign of n at exit; +1 when a truncated run sits at n = 0
  double exit_time = 0.0;
  std::uint64_t n_jumps = 0;
  std::uint64_t seed = 0;
  bool truncated = false;  ///< clock passed max_time; exit_time is then max_time

  friend bool operator==(const ExitSample&, const ExitSample&) = default;
};

struct PathPoint {
  double time;
  std::int64_t n;  ///< imbalance from `time` until the next jump
};

struct Trajectory {
  ExitSample sample;
  std::optional<std::vector<PathPoint>> path;  ///< present iff record_path was set
};

/// Resolves a SimConfig once and draws independent exits from it.
class ExitSampler {
 public:
  explicit ExitSampler(SimConfig config)
      : config_(std::move(config)),
        threshold_(resolve_threshold(config_)),
        max_time_(effective_max_time(config_)),
        table_(config_.params, threshold_.n_threshold) {}

  const SimConfig& config() const noexcept { return config_; }
  const ResolvedThreshold& threshold() const noexcept { return threshold_; }
  const RateTable& table() const noexcept { return table_; }
  double max_time() const noexcept { return max_time_; }

  ExitSample sample(std::uint64_t seed) const { return run(seed, nullptr, false); }

  /// Same random draws as sample(seed) but each direction decision is taken for
  /// the mirrored state -n; yields the reflected trajectory.
  ExitSample sample_mirrored(std::uint64_t seed) const { return run(seed, nullptr, true); }

  Trajectory trajectory(std::uint64_t seed) const {
    Trajectory out;
    if (config_.record_path) {
      std::vector<PathPoint> path{{0.0, 0}};
      out.sample = run(seed, &path, false);
      out.path = std::move(path);
    } else {
      out.sample = run(seed, nullptr, false);
    }
    return out;
  }

 private:
  ExitSample run(std::uint64_t seed, std::vector<PathPoint>* path, bool mirror) const {
    Xoshiro256 rng(seed);
    const RateEntry* rates = table_.data();
    const std::int64_t n_thr = threshold_.n_threshold;
    const std::size_t last = table_.size() - 1;
    std::size_t index = static_cast<std::size_t>(n_thr / 2);

    ExitSample out;
    out.seed = seed;
    double clock = 0.0;
    double carry = 0.0;  // Kahan compensation
    std::uint64_t jumps = 0;
    for (;;) {
      const RateEntry& here = rates[index];
      const double wait = -std::log(rng.uniform_open_closed()) * here.inv_total;
      const double y = wait - carry;
      const double next = clock + y;
      carry = (next - clock) - y;
      clock = next;
      if (clock > max_time_) {
        out.truncated = true;
        clock = max_time_;
        break;
      }
      const double u = rng.uniform();
      const bool up = mirror ? !(u < here.p_minus) : (u < here.p_plus);
      index = up ? index + 1 : index - 1;
      ++jumps;
      if (path != nullptr) {
        path->push_back({clock, 2 * static_cast<std::int64_t>(index) - n_thr});
      }
      if (index == 0 || index == last) break;
    }
    const std::int64_t n = 2 * static_cast<std::int64_t>(index) - n_thr;
    out.sign = n < 0 ? -1 : 1;
    out.exit_time = clock;
    out.n_jumps = jumps;
    return out;
  }

  SimConfig config_;
  ResolvedThreshold threshold_;
  double max_time_;
  RateTable table_;
};

inline ExitSample sample_exit(const SimConfig& config, std::uint64_t seed) {
  return ExitSampler(config).sample(seed);
}

inline ExitSample sample_theta(const SimConfig& config, std::uint64_t seed) {
  if (config.mode != ExitMode::theta) throw config_error("sample_theta: config is not in theta mode");
  return ExitSampler(config).sample(seed);
}

struct EnsembleResult {
  SimConfig config;
  std::uint64_t master_seed = 0;
  std::vector<ExitSample> samples;  ///< ordered by trajectory index
  double wall_time = 0.0;           ///< seconds
};

inline unsigned default_worker_count() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

/// Runs trajectories 0..n_samples-1 with seeds derive_seed(master, i) on
/// `workers` threads (0 = hardware concurrency). Output equals the sequential
/// loop. A worker exception aborts the run with ensemble_error.
inline EnsembleResult run_ensemble(const SimConfig& config, std::uint64_t master_seed,
                                   std::size_t n_samples, unsigned workers = 0) {
  if (n_samples == 0) throw config_error("ensemble needs at least one sample");
  const auto started = std::chrono::steady_clock::now();
  const ExitSampler sampler(config);

  EnsembleResult result{config, master_seed, std::vector<ExitSample>(n_samples), 0.0};

  if (workers == 0) workers = default_worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_samples));

  constexpr std::size_t chunk = 16;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    try {
      for (;;) {
        if (abort.load(std::memory_order_relaxed)) return;
        const std::size_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
        if (begin >= n_samples) return;
        const std::size_t end = std::min(begin + chunk, n_samples);
        for (std::size_t i = begin; i < end; ++i) {
          result.samples[i] = sampler.sample(derive_seed(master_seed, i));
        }
        completed.fetch_add(end - begin, std::memory_order_relaxed);
      }
    } catch (...) {
      abort.store(true);
      const std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  if (failure) {
    std::string what = "ensemble aborted";
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      what += ": ";
      what += e.what();
    } catch (...) {
    }
    throw ensemble_error(what, completed.load());
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

struct MartingalePoint {
  double time;
  double value;
};

/// Z_N(t) = M_N(t) - int_0^t b(M_N(s)) ds at t = 0 and every jump instant of a
/// recorded path. The integrand is piecewise constant, so the integral is exact.
inline std::vector<MartingalePoint> martingale_residual(const Trajectory& trajectory,
                                                        const ModelParams& params) {
  if (!trajectory.path || trajectory.path->empty()) {
    throw usage_error("martingale_residual: trajectory has no recorded path");
  }
  const auto& path = *trajectory.path;
  const double big_n = static_cast<double>(params.n_spins());
  std::vector<MartingalePoint> out;
  out.reserve(path.size());
  double integral = 0.0;
  out.push_back({path.front().time, static_cast<double>(path.front().n) / big_n});
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double m_prev = static_cast<double>(path[k - 1].n) / big_n;
    integral += drift(m_prev, params.beta()) * (path[k].time - path[k - 1].time);
    out.push_back({path[k].time, static_cast<double>(path[k].n) / big_n - integral});
  }
  return out;
}

/// Z_N(t) of the path stopped at its exit time (constant afterwards).
inline double martingale_at(const Trajectory& trajectory, const ModelParams& params, double t) {
  if (!trajectory.path || trajectory.path->empty()) {
    throw usage_error("martingale_at: trajectory has no recorded path");
  }
  const auto& path = *trajectory.path;
  const double big_n = static_cast<double>(params.n_spins());
  const double stop = std::min(t, trajectory.sample.exit_time);
  double integral = 0.0;
  std::size_t k = 0;
  while (k + 1 < path.size() && path[k + 1].time <= stop) {
    integral += drift(static_cast<double>(path[k].n) / big_n, params.beta()) * (path[k + 1].time - path[k].time);
    ++k;
  }
  const double m = static_cast<double>(path[k].n) / big_n;
  integral += drift(m, params.beta()) * (stop - path[k].time);
  return m - integral;
}

}  // namespace cwexit
