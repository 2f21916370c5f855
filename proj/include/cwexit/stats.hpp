#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "cwexit/errors.hpp"
#include "cwexit/normal.hpp"
#include "cwexit/sim.hpp"
#include "cwexit/theory.hpp"

namespace cwexit {

/// Right-continuous empirical distribution function.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw usage_error("ecdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double t) const noexcept {
    const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin();
    return static_cast<double>(count) / static_cast<double>(sorted_.size());
  }

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

inline Ecdf ecdf(std::span<const double> values) { return Ecdf({values.begin(), values.end()}); }

/// Kolmogorov-Smirnov distance sup_t |F_n(t) - F(t)| against a fully specified
/// continuous CDF.
template <class Cdf>
double ks_statistic(std::span<const double> values, Cdf&& cdf) {
  if (values.empty()) throw usage_error("ks_statistic: empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

/// Asymptotic Kolmogorov tail Q(sqrt(n) d) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
/// Small lambda uses the equivalent theta-function form, which converges there.
inline double ks_pvalue(double d, std::size_t n) {
  const double lambda = std::sqrt(static_cast<double>(n)) * d;
  if (lambda <= 0.0) return 1.0;
  double q;
  if (lambda < 1.18) {
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      sum += std::exp(-odd * odd * c);
    }
    q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
  } else {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 == 1 ? term : -term);
      if (term < 1e-300) break;
    }
    q = 2.0 * sum;
  }
  return std::clamp(q, 0.0, 1.0);
}

struct SignBalance {
  double fraction_plus = 0.0;
  double zscore = 0.0;  ///< (fraction - 1/2) / sqrt(1/(4n))
};

inline SignBalance sign_balance(std::span<const int> signs) {
  if (signs.empty()) throw usage_error("sign_balance: empty sample");
  const auto plus = std::count_if(signs.begin(), signs.end(), [](int s) { return s > 0; });
  const double n = static_cast<double>(signs.size());
  const double fraction = static_cast<double>(plus) / n;
  return {fraction, (fraction - 0.5) / std::sqrt(0.25 / n)};
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit fit_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw usage_error("fit_slope: xs and ys differ in length");
  if (xs.size() < 3) throw usage_error("fit_slope: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  if (!(sxx > 0.0)) throw usage_error("fit_slope: xs are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double resid = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += resid * resid;
  }
  fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

/// Sample quantile by linear interpolation between closest ranks: 1-based rank
/// h = n q + 1/2, clamped to [1, n]. `sorted` must be ascending.
inline double sample_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw usage_error("sample_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw domain_error("sample_quantile: q outside [0, 1]");
  const double n = static_cast<double>(sorted.size());
  const double h = n * q + 0.5;
  if (h <= 1.0) return sorted.front();
  if (h >= n) return sorted.back();
  const double lower = std::floor(h);
  const auto i = static_cast<std::size_t>(lower) - 1;
  return sorted[i] + (h - lower) * (sorted[i + 1] - sorted[i]);
}

struct ShiftedSample {
  double value;  ///< exit time minus its deterministic centering
  int sign;
};

/// Non-truncated samples of an ensemble, centered for the ensemble's mode.
inline std::vector<ShiftedSample> shifted_samples(const EnsembleResult& ensemble) {
  const SimConfig& config = ensemble.config;
  double gamma = 0.0;
  if (const auto* e = std::get_if<BallExponent>(&config.threshold)) gamma = e->gamma;
  const double centering = time_centering(config.mode, config.params, gamma);
  std::vector<ShiftedSample> out;
  out.reserve(ensemble.samples.size());
  for (const ExitSample& s : ensemble.samples) {
    if (!s.truncated) out.push_back({s.exit_time - centering, s.sign});
  }
  return out;
}

struct QuantileRow {
  double q;
  double empirical;
  double theoretical;
};

struct GofReport {
  std::size_t n = 0;
  std::size_t truncated = 0;  ///< excluded before analysis; informational
  double ks_distance = 0.0;
  double ks_pvalue = 0.0;
  double sign_fraction_plus = 0.0;
  double sign_zscore = 0.0;
  std::vector<QuantileRow> quantiles;  ///< q = 0.05, 0.10, ..., 0.95
  double mean_empirical = 0.0;
  double stderr_empirical = 0.0;
  double mean_theoretical = 0.0;
};

inline GofReport gof_report(std::span<const ShiftedSample> samples, const LimitLaw& law,
                            std::size_t truncated = 0) {
  if (samples.empty()) throw usage_error("gof_report: no samples left after truncation filter");
  std::vector<double> values;
  std::vector<int> signs;
  values.reserve(samples.size());
  signs.reserve(samples.size());
  for (const auto& s : samples) {
    values.push_back(s.value);
    signs.push_back(s.sign);
  }

  GofReport report;
  report.n = samples.size();
  report.truncated = truncated;
  report.ks_distance = ks_statistic(values, [&law](double t) { return limit_cdf(t, law); });
  report.ks_pvalue = ks_pvalue(report.ks_distance, report.n);
  const SignBalance balance = sign_balance(signs);
  report.sign_fraction_plus = balance.fraction_plus;
  report.sign_zscore = balance.zscore;

  const double n = static_cast<double>(values.size());
  report.mean_empirical = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - report.mean_empirical) * (v - report.mean_empirical);
  report.stderr_empirical = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  report.mean_theoretical = limit_mean(law);

  std::sort(values.begin(), values.end());
  for (int k = 1; k <= 19; ++k) {
    const double q = 0.05 * k;
    report.quantiles.push_back({q, sample_quantile(values, q), limit_quantile(q, law)});
  }
  return report;
}

}  // namespace cwexit
