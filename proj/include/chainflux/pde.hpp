// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainflux/thermodynamics.hpp"

namespace chainflux {

/* Cell-averaged fields on a uniform 1D mesh over [0,1). The torus wraps
 * periodically; the interval carries boundary data supplied by whoever
 * owns the problem (only the quasi-potential solver uses it).
 */
enum class Domain { kTorus, kInterval };

struct Grid1D {
  Domain domain = Domain::kTorus;
  Eigen::MatrixXd values;  // one row per cell, one column per field

  Eigen::Index cells() const { return values.rows(); }
  Eigen::Index components() const { return values.cols(); }
  double dq() const { return 1.0 / static_cast<double>(values.rows()); }
};

struct PdeTrajectory {
  std::vector<double> time;
  std::vector<Grid1D> frames;
  // Set when the gradient monitor tripped; the trajectory then ends at
  // the last completed step instead of the requested horizon.
  bool shock_detected = false;
};

namespace internal {

inline void require_torus_fields(const Grid1D& g, Eigen::Index components,
                                 const char* caller) {
  if (g.domain != Domain::kTorus)
    throw std::runtime_error(std::string(caller) +
                             ": periodic domain required");
  if (g.components() != components)
    throw std::runtime_error(std::string(caller) + ": expected " +
                             std::to_string(components) + " field columns");
  if (g.cells() < 8)
    throw std::runtime_error(std::string(caller) +
                             ": need at least 8 cells");
  if (!g.values.allFinite())
    throw std::runtime_error(std::string(caller) + ": non-finite input");
}

inline double max_abs_jump(const Grid1D& g) {
  const Eigen::Index m = g.cells();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = (i + 1) % m;
    double jump = 0.0;
    for (Eigen::Index c = 0; c < g.components(); ++c)
      jump += std::abs(g.values(j, c) - g.values(i, c));
    worst = std::max(worst, jump);
  }
  return worst;
}

}  // namespace internal

/* Two conservation laws for the thermal field e and the volume field v,
 *
 *   d_t e - d_q tau^2 = 0,   d_t v - 2 d_q tau = 0,
 *
 * closed by a tension map tau(e, v). The flux Jacobian is singular with
 * eigenvalues 0 and -(2 tau tau_e + 2 tau_v), so a local Lax-Friedrichs
 * (Rusanov) scheme with the numerically estimated wave speed is stable
 * under the usual CFL restriction.
 *
 * The underlying derivation only covers the pre-shock window, so the
 * solver watches the largest cell-to-cell jump and stops with
 * shock_detected (keeping the partial trajectory) once it grows past 20
 * times its initial size. Snapshots are evenly spaced over [0, horizon],
 * the first being the initial data.
 */
inline PdeTrajectory solve_euler(
    const Grid1D& initial,
    const std::function<double(double, double)>& tau, double horizon,
    double cfl = 0.45, Eigen::Index snapshots = 5) {
  internal::require_torus_fields(initial, 2, "solve_euler()");
  if (!(horizon > 0.0))
    throw std::runtime_error("solve_euler(): horizon must be > 0");
  if (!(cfl > 0.0) || cfl > 0.45)
    throw std::runtime_error(
        "solve_euler(): cfl must lie in (0, 0.45] (CFLViolation)");
  if (snapshots < 2)
    throw std::runtime_error("solve_euler(): need at least 2 snapshots");

  const Eigen::Index m = initial.cells();
  const double dq = initial.dq();
  Eigen::VectorXd e = initial.values.col(0);
  Eigen::VectorXd v = initial.values.col(1);

  // Wave speed estimate |2 tau tau_e + 2 tau_v| by central differences.
  auto speed = [&](double ec, double vc) {
    const double t0 = tau(ec, vc);
    const double he = 1e-6 * (1.0 + std::abs(ec));
    const double hv = 1e-6 * (1.0 + std::abs(vc));
    const double te = (tau(ec + he, vc) - tau(ec - he, vc)) / (2.0 * he);
    const double tv = (tau(ec, vc + hv) - tau(ec, vc - hv)) / (2.0 * hv);
    return std::abs(2.0 * t0 * te + 2.0 * tv);
  };

  PdeTrajectory out;
  out.time.push_back(0.0);
  out.frames.push_back(initial);
  const double jump0 = std::max(internal::max_abs_jump(initial),
                                1e-12 * (1.0 + initial.values.cwiseAbs()
                                                   .maxCoeff()));

  Eigen::VectorXd tau_c(m), a_c(m), fe(m), fv(m);
  Eigen::VectorXd flux_e(m), flux_v(m);
  double t = 0.0;
  for (Eigen::Index snap = 1; snap < snapshots; ++snap) {
    const double target = horizon * static_cast<double>(snap) /
                          static_cast<double>(snapshots - 1);
    while (t < target - 1e-15 * horizon) {
      double a_max = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        tau_c[i] = tau(e[i], v[i]);
        a_c[i] = speed(e[i], v[i]);
        fe[i] = -tau_c[i] * tau_c[i];
        fv[i] = -2.0 * tau_c[i];
        a_max = std::max(a_max, a_c[i]);
      }
      double dt = target - t;
      if (a_max > 0.0) dt = std::min(dt, cfl * dq / a_max);
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index j = (i + 1) % m;
        const double a = std::max(a_c[i], a_c[j]);
        flux_e[i] = 0.5 * (fe[i] + fe[j]) - 0.5 * a * (e[j] - e[i]);
        flux_v[i] = 0.5 * (fv[i] + fv[j]) - 0.5 * a * (v[j] - v[i]);
      }
      const double r = dt / dq;
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index p = (i + m - 1) % m;
        e[i] -= r * (flux_e[i] - flux_e[p]);
        v[i] -= r * (flux_v[i] - flux_v[p]);
      }
      t += dt;
      if (!e.allFinite() || !v.allFinite())
        throw std::runtime_error(
            "solve_euler(): non-finite state at t = " + std::to_string(t));

      Grid1D probe;
      probe.domain = Domain::kTorus;
      probe.values.resize(m, 2);
      probe.values.col(0) = e;
      probe.values.col(1) = v;
      if (internal::max_abs_jump(probe) > 20.0 * jump0) {
        out.time.push_back(t);
        out.frames.push_back(std::move(probe));
        out.shock_detected = true;
        return out;
      }
    }
    Grid1D frame;
    frame.domain = Domain::kTorus;
    frame.values.resize(m, 2);
    frame.values.col(0) = e;
    frame.values.col(1) = v;
    out.time.push_back(t);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

/* Tension closure of the exponential model: tau(e, v) = -(e - v). */
inline double exponential_tension(double e, double v) { return v - e; }

/* Tension closure for a general potential, tabulated on a rectangle in
 * (e, v) and evaluated by bilinear interpolation. Each node runs the
 * entropy Legendre transform once at construction; the Euler solver can
 * then query tension cheaply inside its flux loop.
 */
class TensionTable {
 public:
  TensionTable(const PotentialSpec& spec, double e_lo, double e_hi,
               double v_lo, double v_hi, Eigen::Index ne = 48,
               Eigen::Index nv = 48)
      : e_lo_(e_lo), e_hi_(e_hi), v_lo_(v_lo), v_hi_(v_hi), tab_(ne, nv) {
    if (!(e_lo < e_hi) || !(v_lo < v_hi) || ne < 2 || nv < 2)
      throw std::runtime_error("TensionTable: malformed ranges");
    for (Eigen::Index i = 0; i < ne; ++i)
      for (Eigen::Index j = 0; j < nv; ++j) {
        const double e =
            e_lo + (e_hi - e_lo) * static_cast<double>(i) /
                       static_cast<double>(ne - 1);
        const double v =
            v_lo + (v_hi - v_lo) * static_cast<double>(j) /
                       static_cast<double>(nv - 1);
        const EntropyPoint p = entropy_legendre(spec, e, v);
        tab_(i, j) = -p.lambda / p.beta;
      }
  }

  double operator()(double e, double v) const {
    const Eigen::Index ne = tab_.rows(), nv = tab_.cols();
    const double x = (e - e_lo_) / (e_hi_ - e_lo_) *
                     static_cast<double>(ne - 1);
    const double y = (v - v_lo_) / (v_hi_ - v_lo_) *
                     static_cast<double>(nv - 1);
    if (x < 0.0 || y < 0.0 || x > static_cast<double>(ne - 1) ||
        y > static_cast<double>(nv - 1))
      throw std::runtime_error("TensionTable: query outside the table");
    const Eigen::Index i =
        std::min(static_cast<Eigen::Index>(x), ne - 2);
    const Eigen::Index j =
        std::min(static_cast<Eigen::Index>(y), nv - 2);
    const double fx = x - static_cast<double>(i);
    const double fy = y - static_cast<double>(j);
    return (1 - fx) * (1 - fy) * tab_(i, j) + fx * (1 - fy) * tab_(i + 1, j) +
           (1 - fx) * fy * tab_(i, j + 1) + fx * fy * tab_(i + 1, j + 1);
  }

 private:
  double e_lo_, e_hi_, v_lo_, v_hi_;
  Eigen::MatrixXd tab_;
};

/* Diffusive hydrodynamic system of the velocity-flip chain,
 *
 *   d_t r = (1/gamma) d_q^2 r,
 *   d_t e = (1/(2 gamma)) d_q^2 (e + r^2/2),
 *
 * integrated forward-in-time, centered-in-space on the torus. Both
 * equations are in divergence form, so the discrete means of r and e are
 * conserved to round-off. The default step sits at half the explicit
 * stability limit of the stiffer equation; a caller-supplied step above
 * that limit is refused.
 */
inline PdeTrajectory solve_diffusive(const Grid1D& initial, double gamma,
                                     double horizon,
                                     Eigen::Index snapshots = 5,
                                     double dt = 0.0) {
  internal::require_torus_fields(initial, 2, "solve_diffusive()");
  if (!(gamma > 0.0))
    throw std::runtime_error("solve_diffusive(): gamma must be > 0");
  if (!(horizon > 0.0))
    throw std::runtime_error("solve_diffusive(): horizon must be > 0");
  if (snapshots < 2)
    throw std::runtime_error(
        "solve_diffusive(): need at least 2 snapshots");
  const double dq = initial.dq();
  const double dt_max = 0.25 * gamma * dq * dq;
  if (dt == 0.0) dt = dt_max;
  if (!(dt > 0.0) || dt > dt_max * (1.0 + 1e-12))
    throw std::runtime_error(
        "solve_diffusive(): step " + std::to_string(dt) +
        " exceeds the stability bound " + std::to_string(dt_max) +
        " (CFLViolation)");

  const Eigen::Index m = initial.cells();
  Eigen::VectorXd r = initial.values.col(0);
  Eigen::VectorXd e = initial.values.col(1);

  PdeTrajectory out;
  out.time.push_back(0.0);
  out.frames.push_back(initial);

  auto laplacian = [&](const Eigen::VectorXd& x, Eigen::VectorXd& lap) {
    for (Eigen::Index i = 0; i < m; ++i)
      lap[i] = x[(i + 1) % m] - 2.0 * x[i] + x[(i + m - 1) % m];
  };

  Eigen::VectorXd lap_r(m), lap_w(m), w(m);
  double t = 0.0;
  for (Eigen::Index snap = 1; snap < snapshots; ++snap) {
    const double target = horizon * static_cast<double>(snap) /
                          static_cast<double>(snapshots - 1);
    while (t < target - 1e-15 * horizon) {
      const double step = std::min(dt, target - t);
      w = e + 0.5 * r.array().square().matrix();
      laplacian(r, lap_r);
      laplacian(w, lap_w);
      r += (step / (gamma * dq * dq)) * lap_r;
      e += (step / (2.0 * gamma * dq * dq)) * lap_w;
      t += step;
    }
    if (!r.allFinite() || !e.allFinite())
      throw std::runtime_error(
          "solve_diffusive(): non-finite state at t = " + std::to_string(t));
    Grid1D frame;
    frame.domain = Domain::kTorus;
    frame.values.resize(m, 2);
    frame.values.col(0) = r;
    frame.values.col(1) = e;
    out.time.push_back(t);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace chainflux
