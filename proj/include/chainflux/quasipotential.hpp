// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace chainflux {

/* Large-deviation rate of observing the energy profile e(q) in the
 * steady state of the boundary-driven chain,
 *
 *   V(e) = int_0^1 [ e/F - 1 - log(e/F) - log(F'/(T_r - T_l)) ] dq,
 *
 * where the auxiliary temperature profile F is the unique nondecreasing
 * solution of
 *
 *   F'' = ((F - e)/F^2) (F')^2,   F(0) = T_l,  F(1) = T_r.
 *
 * The profile e is given as cell averages on a uniform mesh of [0,1]
 * and read through its piecewise-linear interpolant.
 */
struct QuasiPotentialProblem {
  Eigen::VectorXd e;     // cell-averaged energy profile, all > 0
  double t_left = 1.0;   // temperature pinned at q = 0
  double t_right = 1.0;  // temperature pinned at q = 1
};

struct QuasiPotentialResult {
  double value = 0.0;
  Eigen::VectorXd q;  // fine uniform output grid on [0,1]
  Eigen::VectorXd f;  // temperature profile F on that grid
};

namespace internal {

// Piecewise-linear read of cell averages anchored at cell centers and
// clamped at the boundaries.
inline double profile_at(const Eigen::VectorXd& e, double q) {
  const Eigen::Index m = e.size();
  const double x = q * static_cast<double>(m) - 0.5;
  if (x <= 0.0) return e[0];
  if (x >= static_cast<double>(m - 1)) return e[m - 1];
  const Eigen::Index i = static_cast<Eigen::Index>(x);
  const double f = x - static_cast<double>(i);
  return (1.0 - f) * e[i] + f * e[i + 1];
}

/* One Cash-Karp embedded step of y' = rhs(q, y); returns the 5th-order
 * value and writes the 4th/5th difference into *err.
 */
template <class Rhs>
Eigen::Vector2d cash_karp(Rhs&& rhs, double q, const Eigen::Vector2d& y,
                          double h, double* err) {
  const Eigen::Vector2d k1 = rhs(q, y);
  const Eigen::Vector2d k2 = rhs(q + 0.2 * h, y + h * 0.2 * k1);
  const Eigen::Vector2d k3 =
      rhs(q + 0.3 * h, y + h * (0.075 * k1 + 0.225 * k2));
  const Eigen::Vector2d k4 =
      rhs(q + 0.6 * h, y + h * (0.3 * k1 - 0.9 * k2 + 1.2 * k3));
  const Eigen::Vector2d k5 =
      rhs(q + h, y + h * (-11.0 / 54.0 * k1 + 2.5 * k2 - 70.0 / 27.0 * k3 +
                          35.0 / 27.0 * k4));
  const Eigen::Vector2d k6 =
      rhs(q + 0.875 * h,
          y + h * (1631.0 / 55296.0 * k1 + 175.0 / 512.0 * k2 +
                   575.0 / 13824.0 * k3 + 44275.0 / 110592.0 * k4 +
                   253.0 / 4096.0 * k5));
  const Eigen::Vector2d y5 =
      y + h * (37.0 / 378.0 * k1 + 250.0 / 621.0 * k3 + 125.0 / 594.0 * k4 +
               512.0 / 1771.0 * k6);
  const Eigen::Vector2d y4 =
      y + h * (2825.0 / 27648.0 * k1 + 18575.0 / 48384.0 * k3 +
               13525.0 / 55296.0 * k4 + 277.0 / 14336.0 * k5 + 0.25 * k6);
  *err = (y5 - y4).cwiseAbs().maxCoeff();
  return y5;
}

/* Integrate F'' = ((F-e)/F^2)(F')^2 from q = 0 with F(0) = t_left and
 * F'(0) = slope, adaptively. Returns F(1), or +infinity if the solution
 * blows up or leaves F > 0 before reaching q = 1.
 */
inline double shoot(const Eigen::VectorXd& e, double t_left, double slope) {
  auto rhs = [&](double q, const Eigen::Vector2d& y) {
    const double c = (y[0] - profile_at(e, q)) / (y[0] * y[0]);
    return Eigen::Vector2d(y[1], c * y[1] * y[1]);
  };
  Eigen::Vector2d y(t_left, slope);
  double q = 0.0, h = 1e-3;
  const double tol = 1e-12;
  int steps = 0;
  while (q < 1.0) {
    if (++steps > 200000 || !std::isfinite(y[0]) ||
        y[0] > 1e8 * (1.0 + t_left))
      return std::numeric_limits<double>::infinity();
    h = std::min(h, 1.0 - q);
    double err = 0.0;
    const Eigen::Vector2d trial = cash_karp(rhs, q, y, h, &err);
    const double scale = tol * (1.0 + y.cwiseAbs().maxCoeff());
    if (err <= scale || h <= 1e-12) {
      q += h;
      y = trial;
      if (y[0] <= 0.0) return std::numeric_limits<double>::infinity();
      h *= std::min(5.0, 0.9 * std::pow(scale / std::max(err, 1e-300), 0.2));
    } else {
      h *= std::max(0.1, 0.9 * std::pow(scale / err, 0.25));
    }
  }
  return y[0];
}

}  // namespace internal

inline QuasiPotentialResult quasi_potential(
    const QuasiPotentialProblem& problem) {
  const Eigen::Index m = problem.e.size();
  if (m < 8)
    throw std::runtime_error("quasi_potential(): need at least 8 cells");
  if (!problem.e.allFinite() || problem.e.minCoeff() <= 0.0)
    throw std::runtime_error(
        "quasi_potential(): energy profile must be positive and finite");
  if (!(problem.t_left > 0.0) || !(problem.t_right > 0.0))
    throw std::runtime_error(
        "quasi_potential(): boundary temperatures must be > 0");

  // The BVP orientation assumes T_l <= T_r; the opposite order is the
  // mirror image, solved on the reflected profile and mapped back.
  if (problem.t_left > problem.t_right) {
    QuasiPotentialProblem mirrored;
    mirrored.e = problem.e.reverse();
    mirrored.t_left = problem.t_right;
    mirrored.t_right = problem.t_left;
    QuasiPotentialResult r = quasi_potential(mirrored);
    const Eigen::VectorXd f = r.f.reverse();
    r.f = f;
    return r;
  }

  const Eigen::Index fine = std::max<Eigen::Index>(4096, 8 * m);
  QuasiPotentialResult out;
  out.q.resize(fine + 1);
  out.f.resize(fine + 1);
  for (Eigen::Index i = 0; i <= fine; ++i)
    out.q[i] = static_cast<double>(i) / static_cast<double>(fine);

  const double dT = problem.t_right - problem.t_left;
  if (dT <= 1e-14 * problem.t_right) {
    // Equal boundary temperatures: F is flat and the slope term of the
    // integrand drops out.
    const double T = problem.t_left;
    out.f.setConstant(T);
    Eigen::VectorXd integrand(fine + 1);
    for (Eigen::Index i = 0; i <= fine; ++i) {
      const double ratio = internal::profile_at(problem.e, out.q[i]) / T;
      integrand[i] = ratio - 1.0 - std::log(ratio);
    }
    double v = 0.0;  // Simpson weights on the uniform fine grid
    for (Eigen::Index i = 0; i <= fine; ++i) {
      const double w = (i == 0 || i == fine) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      v += w * integrand[i];
    }
    out.value = v / (3.0 * static_cast<double>(fine));
    return out;
  }

  // Shooting on the initial slope. Slope zero keeps F flat at T_l and
  // undershoots; the upper bracket comes from doubling.
  double lo = 0.0, hi = dT;
  int doublings = 0;
  while (internal::shoot(problem.e, problem.t_left, hi) < problem.t_right) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60)
      throw std::runtime_error(
          "quasi_potential(): no slope reaches the right boundary "
          "(ShootingFailure)");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double f1 = internal::shoot(problem.e, problem.t_left, mid);
    (f1 < problem.t_right ? lo : hi) = mid;
  }
  const double slope = 0.5 * (lo + hi);
  const double landed = internal::shoot(problem.e, problem.t_left, slope);
  if (!std::isfinite(landed) ||
      std::abs(landed - problem.t_right) > 1e-8 * problem.t_right)
    throw std::runtime_error(
        "quasi_potential(): bisection failed to meet the right boundary "
        "(ShootingFailure)");

  // Re-integrate at the converged slope with fixed fine steps for dense
  // output, accumulating F and F' at the grid nodes.
  auto rhs = [&](double q, const Eigen::Vector2d& y) {
    const double c = (y[0] - internal::profile_at(problem.e, q)) /
                     (y[0] * y[0]);
    return Eigen::Vector2d(y[1], c * y[1] * y[1]);
  };
  const double h = 1.0 / static_cast<double>(fine);
  Eigen::Vector2d y(problem.t_left, slope);
  Eigen::VectorXd fp(fine + 1);
  out.f[0] = y[0];
  fp[0] = y[1];
  for (Eigen::Index i = 0; i < fine; ++i) {
    const double q = out.q[i];
    const Eigen::Vector2d k1 = rhs(q, y);
    const Eigen::Vector2d k2 = rhs(q + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::Vector2d k3 = rhs(q + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::Vector2d k4 = rhs(q + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.f[i + 1] = y[0];
    fp[i + 1] = y[1];
  }

  Eigen::VectorXd integrand(fine + 1);
  for (Eigen::Index i = 0; i <= fine; ++i) {
    const double ratio =
        internal::profile_at(problem.e, out.q[i]) / out.f[i];
    if (fp[i] <= 0.0)
      throw std::runtime_error(
          "quasi_potential(): profile not increasing (ShootingFailure)");
    integrand[i] = ratio - 1.0 - std::log(ratio) - std::log(fp[i] / dT);
  }
  double v = 0.0;
  for (Eigen::Index i = 0; i <= fine; ++i) {
    const double w = (i == 0 || i == fine) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    v += w * integrand[i];
  }
  out.value = v / (3.0 * static_cast<double>(fine));
  return out;
}

}  // namespace chainflux
