// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainflux {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int evaluations = 0;
};

namespace internal {

// Gauss-Kronrod 15(7) nodes and weights on [-1,1], positive half.
// Index 0 is the center node; odd indices are the Kronrod-only nodes.
constexpr double kGkNode[8] = {
    0.0,
    0.2077849550078985,
    0.4058451513773972,
    0.5860872354676911,
    0.7415311855993944,
    0.8648644233597691,
    0.9491079123427585,
    0.9914553711208126,
};
constexpr double kKronrodWeight[8] = {
    0.2094821410847278, 0.2044329400752989, 0.1903505780647854,
    0.1690047266392679, 0.1406532597155259, 0.1047900103222502,
    0.0630920926299785, 0.0229353220105292,
};
// Gauss-7 weights for the even-index (embedded) nodes.
constexpr double kGaussWeight[4] = {
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892767,
    0.1294849661688697,
};

template <class F>
void gk15(F& f, double a, double b, double* value, double* error) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(mid);
  double kronrod = kKronrodWeight[0] * fc;
  double gauss = kGaussWeight[0] * fc;
  for (int i = 1; i < 8; ++i) {
    const double dx = half * kGkNode[i];
    const double fsum = f(mid - dx) + f(mid + dx);
    kronrod += kKronrodWeight[i] * fsum;
    if (i % 2 == 0) gauss += kGaussWeight[i / 2] * fsum;
  }
  *value = kronrod * half;
  *error = std::abs((kronrod - gauss) * half);
}

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace internal

/* Adaptive Gauss-Kronrod integration of f over [a,b].
 *
 * Bisects the interval with the largest error estimate until the summed
 * estimate meets abs_tol or rel_tol. The defaults are the tolerances all
 * thermodynamic quantities in this project are quoted at.
 */
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-10,
                           double rel_tol = 1e-8, int max_intervals = 2000) {
  if (!(a < b))
    throw std::runtime_error("integrate(): requires a < b, got a=" +
                             std::to_string(a) + " b=" + std::to_string(b));
  QuadratureResult result;
  std::priority_queue<internal::Interval> heap;
  internal::Interval whole{a, b, 0.0, 0.0};
  internal::gk15(f, a, b, &whole.value, &whole.error);
  result.evaluations = 15;
  heap.push(whole);
  double total = whole.value;
  double err = whole.error;
  int count = 1;
  while (err > abs_tol && err > rel_tol * std::abs(total)) {
    if (count >= max_intervals)
      throw std::runtime_error(
          "integrate(): failed to converge after " +
          std::to_string(max_intervals) +
          " subdivisions, error estimate " + std::to_string(err));
    internal::Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    internal::Interval left{worst.a, mid, 0.0, 0.0};
    internal::Interval right{mid, worst.b, 0.0, 0.0};
    internal::gk15(f, left.a, left.b, &left.value, &left.error);
    internal::gk15(f, right.a, right.b, &right.value, &right.error);
    result.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  result.value = total;
  result.error = err;
  return result;
}

/* Integral of f over the whole line, for integrands that decay at infinity.
 *
 * The support is bracketed by doubling steps away from `center`, which must
 * sit inside the bulk of the integrand (callers locate the density mode
 * first). Expansion stops once the integrand at the edge is below
 * `edge_rel` times the largest magnitude seen.
 */
template <class F>
QuadratureResult integrate_line(F&& f, double center, double abs_tol = 1e-10,
                                double rel_tol = 1e-8,
                                double edge_rel = 1e-16) {
  double peak = std::abs(f(center));
  int evals = 1;
  double lo = center - 1.0, hi = center + 1.0;
  double step = 1.0;
  while (true) {
    const double v = std::abs(f(lo));
    ++evals;
    peak = std::max(peak, v);
    if (v <= edge_rel * peak) break;
    step *= 2.0;
    lo -= step;
    if (step > 1e12)
      throw std::runtime_error(
          "integrate_line(): integrand does not decay on the left");
  }
  step = 1.0;
  while (true) {
    const double v = std::abs(f(hi));
    ++evals;
    peak = std::max(peak, v);
    if (v <= edge_rel * peak) break;
    step *= 2.0;
    hi += step;
    if (step > 1e12)
      throw std::runtime_error(
          "integrate_line(): integrand does not decay on the right");
  }
  QuadratureResult r = integrate(f, lo, hi, abs_tol, rel_tol);
  r.evaluations += evals;
  return r;
}

/* Golden-section minimizer for smooth unimodal functions, used to locate
 * density modes before integrating. Expands the bracket from x0 first.
 */
template <class F>
double minimize_scalar(F&& f, double x0, double tol = 1e-10) {
  double step = 1.0;
  double a = x0 - step, b = x0 + step;
  double fa = f(a), fm = f(x0), fb = f(b);
  double m = x0;
  // Walk downhill until the middle point is the smallest of the three.
  for (int i = 0; i < 200 && !(fm <= fa && fm <= fb); ++i) {
    if (fa < fb) {
      b = m; fb = fm;
      m = a; fm = fa;
      step *= 2.0;
      a = m - step; fa = f(a);
    } else {
      a = m; fa = fm;
      m = b; fm = fb;
      step *= 2.0;
      b = m + step; fb = f(b);
    }
    if (step > 1e12)
      throw std::runtime_error("minimize_scalar(): no minimum found");
  }
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace chainflux
