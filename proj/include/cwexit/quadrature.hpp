#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cwexit/errors.hpp"

namespace cwexit {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  ///< estimated absolute error
  std::size_t intervals = 0;
};

namespace detail {

struct Segment {
  double lo, hi, value, error;
  bool operator<(const Segment& other) const noexcept { return error < other.error; }
};

// 15-point Kronrod rule with the embedded 7-point Gauss rule; QUADPACK qk15 constants.
template <class Fn>
Segment gauss_kronrod_15(Fn& f, double lo, double hi) {
  static constexpr std::array<double, 8> xgk{
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk{
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg{
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = wgk[7] * fc;
  double gauss = wg[3] * fc;
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * pair;
    if (j % 2 == 1) gauss += wg[j / 2] * pair;
  }
  return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod 7/15 quadrature. Bisects the segment with the
/// largest error estimate until the total estimate drops below
/// max(abs_tol, rel_tol * |I|). Throws numerical_error past `max_segments`.
template <class Fn>
QuadratureResult integrate(Fn&& f, double lo, double hi, double abs_tol, double rel_tol = 0.0,
                           std::size_t max_segments = 4000) {
  if (lo == hi) return {};
  std::vector<detail::Segment> heap{detail::gauss_kronrod_15(f, lo, hi)};
  double value = heap.front().value;
  double error = heap.front().error;
  while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    if (heap.size() >= max_segments) {
      throw numerical_error("integrate: tolerance not reached within segment budget");
    }
    std::pop_heap(heap.begin(), heap.end());
    const detail::Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= worst.lo || mid >= worst.hi) {
      throw numerical_error("integrate: segment cannot be split further");
    }
    heap.push_back(detail::gauss_kronrod_15(f, worst.lo, mid));
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(detail::gauss_kronrod_15(f, mid, worst.hi));
    std::push_heap(heap.begin(), heap.end());
    // Re-sum rather than update incrementally so the totals do not drift.
    value = 0.0;
    error = 0.0;
    for (const auto& seg : heap) {
      value += seg.value;
      error += seg.error;
    }
  }
  return {value, error, heap.size()};
}

}  // namespace cwexit
