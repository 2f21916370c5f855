/*
 * model.hpp - Curie-Weiss magnetization chain: rates, drift and equilibrium weights.
 *
 * N spins flip with rates c_i(x) = exp(-beta x_i M(x)). Lumping by magnetization
 * m = n/N gives a birth-death chain on the even spin imbalances n in [-N, N]
 * with steps of +-2:
 *
 *   lambda_+(m) = N (1 - m)/2 exp( beta m)     (a -1 spin flips up)
 *   lambda_-(m) = N (1 + m)/2 exp(-beta m)     (a +1 spin flips down)
 *
 * Drift b(m) = (2/N)(lambda_+ - lambda_-) = (1 - m)e^{beta m} - (1 + m)e^{-beta m},
 * expansion rate at the unstable point a = b'(0) = 2 beta - 2, and Q(m) = b(m) - a m.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "cwexit/errors.hpp"

namespace cwexit {

/// Inverse temperature and (even) spin count of one system.
class ModelParams {
 public:
  ModelParams(double beta, std::int64_t n_spins) : beta_(beta), n_spins_(n_spins) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw config_error("beta must be a finite positive number");
    }
    if (n_spins < 2 || n_spins % 2 != 0) {
      throw config_error("spin count must be a positive even integer, got " +
                         std::to_string(n_spins));
    }
  }

  double beta() const noexcept { return beta_; }
  std::int64_t n_spins() const noexcept { return n_spins_; }

  /// True in the low-temperature regime with two stable magnetizations.
  bool double_well() const noexcept { return beta_ > 1.0; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  double beta_;
  std::int64_t n_spins_;
};

/// Chain state held as the integer imbalance n = #(+1) - #(-1).
struct MagnetizationState {
  std::int64_t n = 0;

  double magnetization(const ModelParams& params) const noexcept {
    return static_cast<double>(n) / static_cast<double>(params.n_spins());
  }

  bool valid(const ModelParams& params) const noexcept {
    const auto big_n = params.n_spins();
    return n >= -big_n && n <= big_n && (n - big_n) % 2 == 0;
  }
};

struct JumpRates {
  double plus = 0.0;   ///< rate of m -> m + 2/N
  double minus = 0.0;  ///< rate of m -> m - 2/N

  double total() const noexcept { return plus + minus; }
};

namespace detail {

inline void require_magnetization(double m, const char* where) {
  if (!(std::abs(m) <= 1.0)) {
    throw domain_error(std::string(where) + ": magnetization outside [-1, 1]");
  }
}

// sinh(y) - y without cancellation for small |y|.
inline double sinh_minus_identity(double y) noexcept {
  if (std::abs(y) >= 0.5) return std::sinh(y) - y;
  const double y2 = y * y;
  // y^3/3! (1 + y^2/(4*5) (1 + y^2/(6*7) (...)))
  double s = 1.0;
  for (int k = 12; k >= 2; --k) {
    const double denom = static_cast<double>((2 * k) * (2 * k + 1));
    s = 1.0 + y2 / denom * s;
  }
  return y * y2 / 6.0 * s;
}

}  // namespace detail

inline JumpRates jump_rates(double m, const ModelParams& params) {
  detail::require_magnetization(m, "jump_rates");
  const double half_n = 0.5 * static_cast<double>(params.n_spins());
  const double beta = params.beta();
  return {half_n * (1.0 - m) * std::exp(beta * m), half_n * (1.0 + m) * std::exp(-beta * m)};
}

/// b(m); defined for every real m.
inline double drift(double m, double beta) noexcept {
  return (1.0 - m) * std::exp(beta * m) - (1.0 + m) * std::exp(-beta * m);
}

inline double lyapunov(double beta) noexcept { return 2.0 * beta - 2.0; }

/// Q(m) = b(m) - a m, evaluated as 2(sinh(beta m) - beta m) - 4 m sinh^2(beta m / 2)
/// so the O(m^3) value keeps full relative precision near 0.
inline double nonlinearity(double m, double beta) noexcept {
  const double y = beta * m;
  const double sh = std::sinh(0.5 * y);
  return 2.0 * detail::sinh_minus_identity(y) - 4.0 * m * sh * sh;
}

/// Leading coefficient of Q(m) ~ c m^3 as m -> 0.
inline double nonlinearity_cubic_coefficient(double beta) noexcept {
  return beta * beta * beta / 3.0 - beta * beta;
}

/// Bernoulli entropy in nats with 0 ln 0 = 0.
inline double entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw domain_error("entropy: probability outside [0, 1]");
  auto xlogx = [](double p) { return p > 0.0 ? p * std::log(p) : 0.0; };
  return -xlogx(x) - xlogx(1.0 - x);
}

inline double free_energy(double m, double beta) {
  detail::require_magnetization(m, "free_energy");
  return -0.5 * beta * m * m - entropy(0.5 + 0.5 * m);
}

/// L_N f(m) = lambda_+ (f(m + 2/N) - f(m)) + lambda_- (f(m - 2/N) - f(m)).
/// A term whose rate vanishes (full polarization) is skipped, so f is never
/// evaluated outside [-1, 1].
template <class Fn>
double generator_apply(Fn&& f, double m, const ModelParams& params) {
  detail::require_magnetization(m, "generator_apply");
  const double step = 2.0 / static_cast<double>(params.n_spins());
  const JumpRates rates = jump_rates(m, params);
  const double fm = f(m);
  double out = 0.0;
  constexpr double slack = 1e-12;
  if (rates.plus != 0.0) {
    if (m + step > 1.0 + slack) throw domain_error("generator_apply: m + 2/N outside [-1, 1]");
    out += rates.plus * (f(m + step) - fm);
  }
  if (rates.minus != 0.0) {
    if (m - step < -1.0 - slack) throw domain_error("generator_apply: m - 2/N outside [-1, 1]");
    out += rates.minus * (f(m - step) - fm);
  }
  return out;
}

/// ln[ C(N, (N+n)/2) ] + beta n^2 / (2N), the unnormalized log Gibbs weight of
/// magnetization n/N.
inline double gibbs_log_weight(std::int64_t n, const ModelParams& params) {
  const MagnetizationState state{n};
  if (!state.valid(params)) {
    throw domain_error("gibbs_log_weight: imbalance must satisfy |n| <= N and (N+n)/2 integer");
  }
  const double big_n = static_cast<double>(params.n_spins());
  const double k = 0.5 * (big_n + static_cast<double>(n));
  const double log_binom = std::lgamma(big_n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(big_n - k + 1.0);
  const double dn = static_cast<double>(n);
  return log_binom + params.beta() * dn * dn / (2.0 * big_n);
}

/// Relative detailed-balance defect |pi(n) lambda_+(n) / (pi(n+2) lambda_-(n+2)) - 1|.
/// The weight ratio pi(n+2)/pi(n) = (N-k)/(k+1) e^{beta (2n+2)/N}, k = (N+n)/2, is
/// formed directly: differencing lgamma values near ln N! would lose ~1e-12 at N = 1000.
/// Returns nullopt at n = N, where no upward move exists.
inline std::optional<double> detailed_balance_residual(std::int64_t n, const ModelParams& params) {
  if (!MagnetizationState{n}.valid(params)) {
    throw domain_error("detailed_balance_residual: invalid imbalance");
  }
  if (n == params.n_spins()) return std::nullopt;
  const double big_n = static_cast<double>(params.n_spins());
  const double k = 0.5 * (big_n + static_cast<double>(n));
  const double up = jump_rates(static_cast<double>(n) / big_n, params).plus;
  const double down = jump_rates(static_cast<double>(n + 2) / big_n, params).minus;
  const double log_weight_ratio =
      std::log((big_n - k) / (k + 1.0)) + params.beta() * (2.0 * static_cast<double>(n) + 2.0) / big_n;
  return std::abs(std::expm1(std::log(up / down) - log_weight_ratio));
}

}  // namespace cwexit
