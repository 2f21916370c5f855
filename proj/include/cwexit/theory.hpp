/*
 * theory.hpp - deterministic side of the exit problem.
 *
 *   m_star   positive root of beta m = atanh(m)          (stable magnetization)
 *   K(r)     -int_0^r Q(x) / (a x b(x)) dx                (log-correction of the flow)
 *   D(r)     K(r) + ln(r)/a + ln(a/2)/(2a)                (limit-law shift)
 *   t(d, r)  int_d^r dx / b(x)                            (transit time of x' = b(x))
 *
 * The exit time tau_N(R) - ln(N)/(2a) converges to -(1/a) ln|G| + D(R) with G a
 * standard Gaussian and an independent fair sign; the exit from the shrinking
 * ball |m| < N^{-gamma} satisfies theta_N - ((1/2 - gamma)/a) ln N -> -(1/a) ln|H|
 * with H ~ N(0, 2/a). LimitLaw covers both through (a, shift, sigma).
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "cwexit/errors.hpp"
#include "cwexit/model.hpp"
#include "cwexit/normal.hpp"
#include "cwexit/quadrature.hpp"

namespace cwexit {

inline constexpr double kDefaultQuadratureTolerance = 1e-12;

/// Positive root of beta m = atanh(m) by bisection on [1e-15, 1 - 1e-15],
/// iterated until the bracket cannot shrink further in double precision.
inline double solve_m_star(double beta) {
  if (!(beta > 1.0)) {
    throw domain_error("solve_m_star: no spontaneous magnetization for beta <= 1");
  }
  auto g = [beta](double m) { return beta * m - std::atanh(m); };
  double lo = 1e-15;
  double hi = 1.0 - 1e-15;
  if (!(g(lo) > 0.0)) {
    // beta - 1 below double resolution at the lower end of the bracket
    throw domain_error("solve_m_star: beta too close to 1 to resolve m_star");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

namespace detail {

inline void require_radius(double r, double m_star, const char* where) {
  if (!(r >= 0.0)) throw domain_error(std::string(where) + ": radius must be >= 0");
  if (!(r < m_star)) {
    throw domain_error(std::string(where) + ": radius must be below m_star (the drift vanishes there)");
  }
}

}  // namespace detail

/// Integrand of K; the removable singularity at 0 is set to its limit 0.
inline double correction_K_integrand(double x, double beta) noexcept {
  if (x == 0.0) return 0.0;
  const double a = lyapunov(beta);
  return -nonlinearity(x, beta) / (a * x * drift(x, beta));
}

inline double correction_K(double r, double beta, double abs_tol = kDefaultQuadratureTolerance) {
  const double m_star = solve_m_star(beta);
  detail::require_radius(r, m_star, "correction_K");
  if (r == 0.0) return 0.0;
  return integrate([beta](double x) { return correction_K_integrand(x, beta); }, 0.0, r, abs_tol)
      .value;
}

inline double shift_D(double r, double beta, double abs_tol = kDefaultQuadratureTolerance) {
  if (!(r > 0.0)) throw domain_error("shift_D: radius must be > 0");
  const double a = lyapunov(beta);
  return correction_K(r, beta, abs_tol) + std::log(r) / a + std::log(0.5 * a) / (2.0 * a);
}

/// Time for x' = b(x) to travel from delta to r, both in (0, m_star). Integrated in
/// u = ln x, where the integrand x / b(x) stays bounded as x -> 0.
inline double transit_time(double delta, double r, double beta,
                           double abs_tol = kDefaultQuadratureTolerance) {
  const double m_star = solve_m_star(beta);
  if (!(delta > 0.0) || !(r < m_star) || !(delta <= r)) {
    throw domain_error("transit_time: need 0 < delta <= r < m_star");
  }
  if (delta == r) return 0.0;
  // x / b(x) written as 1 / (a + Q(x)/x): the direct form of b cancels badly for small x.
  const double a = lyapunov(beta);
  auto integrand = [beta, a](double u) {
    const double x = std::exp(u);
    return 1.0 / (a + nonlinearity(x, beta) / x);
  };
  return integrate(integrand, std::log(delta), std::log(r), abs_tol).value;
}

/// S^t x0 for x' = b(x): fixed-step classical RK4 with h ~ 1e-4/a, refined by
/// step halving until two successive step counts agree to 1e-12. Negative t
/// integrates backward.
inline double flow(double x0, double t, double beta) {
  if (!(std::abs(x0) < 1.0)) throw domain_error("flow: |x0| must be below 1");
  if (t == 0.0 || x0 == 0.0) return x0;
  const double a = lyapunov(beta);
  const double base_step = 1e-4 / (a > 0.0 ? a : 1.0);

  auto rk4 = [beta, x0, t](std::int64_t steps) {
    const double h = t / static_cast<double>(steps);
    double x = x0;
    for (std::int64_t i = 0; i < steps; ++i) {
      const double k1 = drift(x, beta);
      const double k2 = drift(x + 0.5 * h * k1, beta);
      const double k3 = drift(x + 0.5 * h * k2, beta);
      const double k4 = drift(x + h * k3, beta);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
  };

  auto steps = static_cast<std::int64_t>(std::ceil(std::abs(t) / base_step));
  if (steps < 1) steps = 1;
  double coarse = rk4(steps);
  double fine = rk4(2 * steps);
  constexpr std::int64_t max_steps = std::int64_t{1} << 28;
  while (std::abs(fine - coarse) > 1e-12 && 4 * steps <= max_steps) {
    steps *= 2;
    coarse = fine;
    fine = rk4(2 * steps);
  }
  return fine;
}

/// Law of T = shift - (1/a) ln|Z| with Z ~ N(0, sigma^2); the sign of Z is an
/// independent fair coin.
struct LimitLaw {
  double a = 1.0;
  double shift = 0.0;
  double sigma = 1.0;
};

/// Limit of tau_N(R) - ln(N)/(2a).
inline LimitLaw tau_limit_law(double beta, double r) {
  return {lyapunov(beta), shift_D(r, beta), 1.0};
}

/// Limit of theta_N - ((1/2 - gamma)/a) ln N: H ~ N(0, 2/a), no shift.
inline LimitLaw theta_limit_law(double beta) {
  const double a = lyapunov(beta);
  if (!(a > 0.0)) throw domain_error("theta_limit_law: requires beta > 1");
  return {a, 0.0, std::sqrt(2.0 / a)};
}

/// P(T <= t) = 2 (1 - Phi(e^{-a (t - shift)} / sigma)).
inline double limit_cdf(double t, const LimitLaw& law) noexcept {
  const double y = std::exp(-law.a * (t - law.shift)) / law.sigma;
  return std::erfc(y / std::numbers::sqrt2);
}

inline double limit_pdf(double t, const LimitLaw& law) noexcept {
  const double y = std::exp(-law.a * (t - law.shift)) / law.sigma;
  if (!std::isfinite(y)) return 0.0;
  return 2.0 * normal_pdf(y) * law.a * y;
}

inline double limit_quantile(double q, const LimitLaw& law) {
  if (!(q > 0.0 && q < 1.0)) throw domain_error("limit_quantile: q must lie in (0, 1)");
  // Phi^{-1}(1 - q/2) written as -Phi^{-1}(q/2) to keep precision for q near 1.
  const double y = -normal_quantile(0.5 * q);
  return law.shift - std::log(law.sigma * y) / law.a;
}

/// E[T] using E ln|Z| = ln(sigma) - (gamma_E + ln 2)/2.
inline double limit_mean(const LimitLaw& law) noexcept {
  const double mean_log_abs = std::log(law.sigma) - 0.5 * (std::numbers::egamma + std::numbers::ln2);
  return law.shift - mean_log_abs / law.a;
}

/// Derived constants for one (beta, R) pair.
struct TheoryConstants {
  double beta = 0.0;
  double a = 0.0;
  double m_star = 0.0;
  double r_threshold = 0.0;
  double k_of_r = 0.0;
  double d_of_r = 0.0;

  LimitLaw law() const noexcept { return {a, d_of_r, 1.0}; }
};

inline TheoryConstants theory_constants(double beta, double r) {
  TheoryConstants c;
  c.beta = beta;
  c.a = lyapunov(beta);
  c.m_star = solve_m_star(beta);
  if (!(r > 0.0 && r < c.m_star)) throw domain_error("theory_constants: R must lie in (0, m_star)");
  c.r_threshold = r;
  c.k_of_r = correction_K(r, beta);
  c.d_of_r = c.k_of_r + std::log(r) / c.a + std::log(0.5 * c.a) / (2.0 * c.a);
  return c;
}

/// Mean exit time of the chain from n = 0 to |n| >= n_threshold: solves L_N u = -1
/// on the interior even states with u = 0 on the boundary (Thomas algorithm).
inline double exact_mean_exit(const ModelParams& params, std::int64_t n_threshold) {
  if (n_threshold < 2 || n_threshold % 2 != 0 || n_threshold > params.n_spins()) {
    throw config_error("exact_mean_exit: threshold must be even with 2 <= n_thr <= N");
  }
  const std::int64_t states = n_threshold - 1;  // n = -n_thr + 2, ..., n_thr - 2
  if (states > 1'000'000) throw config_error("exact_mean_exit: too many states for a direct solve");

  const auto size = static_cast<std::size_t>(states);
  const double big_n = static_cast<double>(params.n_spins());
  std::vector<double> lower(size), diag(size), upper(size), rhs(size, -1.0);
  for (std::size_t i = 0; i < size; ++i) {
    const auto n = -n_threshold + 2 + 2 * static_cast<std::int64_t>(i);
    const JumpRates r = jump_rates(static_cast<double>(n) / big_n, params);
    lower[i] = r.minus;
    upper[i] = r.plus;
    diag[i] = -r.total();
  }
  // Forward sweep.
  for (std::size_t i = 1; i < size; ++i) {
    if (diag[i - 1] == 0.0) throw numerical_error("exact_mean_exit: singular tridiagonal system");
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> u(size);
  u[size - 1] = rhs[size - 1] / diag[size - 1];
  for (std::size_t i = size - 1; i-- > 0;) u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
  return u[static_cast<std::size_t>(n_threshold / 2 - 1)];
}

/// J(m) = F(m) - min F; the minimum sits at +-m_star for beta > 1 and at 0 otherwise.
inline double rate_function_J(double m, double beta) {
  const double f_min = beta > 1.0 ? free_energy(solve_m_star(beta), beta) : free_energy(0.0, beta);
  return free_energy(m, beta) - f_min;
}

}  // namespace cwexit
