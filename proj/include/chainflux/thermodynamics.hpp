// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "chainflux/potentials.hpp"
#include "chainflux/quadrature.hpp"

namespace chainflux {

/* Grand-canonical single-site state: the density is
 *     d mu(eta) = Z(beta,lambda)^{-1} exp(-beta V(eta) - lambda eta) d eta,
 * with eta on the line (on the circle for the rotor). Energy and volume are
 * the means of V(eta) and eta; the tension is -lambda/beta, an exact
 * integration-by-parts identity.
 */
struct ThermoPoint {
  double beta;
  double lambda;
  double e;     // mean potential energy per site
  double v;     // mean volume (stretch) per site
  double tau;   // tension, -lambda/beta
  double logZ;  // log partition function
};

/* Integrability region of exp(-beta V - lambda eta).
 *
 * Harmonic families and the quartic chain accept every lambda. The
 * exponential chain maps to a Gamma(beta+lambda, beta) law in xi = e^{-eta},
 * so it needs beta+lambda > 0. The rotor lives on the circle where lambda
 * has no grand-canonical meaning; only lambda = 0 is admitted.
 */
inline bool thermo_admissible(const PotentialSpec& spec, double beta,
                              double lambda) {
  if (!(beta > 0.0)) return false;
  switch (spec.family) {
    case PotentialFamily::kHarmonic:
    case PotentialFamily::kPinnedHarmonic:
    case PotentialFamily::kFpuQuartic:
      return std::isfinite(lambda);
    case PotentialFamily::kExponentialKvM:
      return beta + lambda > 0.0;
    case PotentialFamily::kRotor:
      return lambda == 0.0;
  }
  return false;
}

inline void require_admissible(const PotentialSpec& spec, double beta,
                               double lambda, const char* caller) {
  if (!thermo_admissible(spec, beta, lambda))
    throw std::runtime_error(
        std::string(caller) + "(): (beta, lambda) = (" + std::to_string(beta) +
        ", " + std::to_string(lambda) + ") is outside the integrability " +
        "region of the " + family_name(spec.family) + " family");
}

namespace internal {

struct GibbsWeight {
  const PotentialSpec& spec;
  double beta, lambda;
  double shift;  // subtracted from the exponent to avoid under/overflow
  double mode;   // argmin of beta V + lambda eta
  double lo, hi; // integration window (the circle for the rotor)
  bool circle;

  double operator()(double eta) const {
    return std::exp(shift - beta * potential(spec, eta) - lambda * eta);
  }
};

inline GibbsWeight make_weight(const PotentialSpec& spec, double beta,
                               double lambda) {
  GibbsWeight w{spec, beta, lambda, 0.0, 0.0, 0.0, 0.0,
                spec.family == PotentialFamily::kRotor};
  if (w.circle) {
    w.mode = 0.0;
    w.lo = -M_PI;
    w.hi = M_PI;
  } else {
    w.mode = minimize_scalar(
        [&](double eta) { return beta * potential(spec, eta) + lambda * eta; },
        0.0);
  }
  w.shift = beta * potential(spec, w.mode) + lambda * w.mode;
  return w;
}

// Normalized mean of g under the Gibbs weight; Z0 is the integral of the
// shifted weight itself.
template <class G>
double weighted_mean(const GibbsWeight& w, double Z0, G&& g) {
  auto f = [&](double eta) { return g(eta) * w(eta); };
  const QuadratureResult r =
      w.circle ? integrate(f, w.lo, w.hi) : integrate_line(f, w.mode);
  return r.value / Z0;
}

inline double weight_norm(const GibbsWeight& w) {
  return (w.circle ? integrate(w, w.lo, w.hi) : integrate_line(w, w.mode))
      .value;
}

}  // namespace internal

inline ThermoPoint thermo_functions(const PotentialSpec& spec, double beta,
                                    double lambda) {
  require_admissible(spec, beta, lambda, "thermo_functions");
  const internal::GibbsWeight w = internal::make_weight(spec, beta, lambda);
  const double Z0 = internal::weight_norm(w);
  ThermoPoint p;
  p.beta = beta;
  p.lambda = lambda;
  p.logZ = std::log(Z0) - w.shift;
  p.v = internal::weighted_mean(w, Z0, [](double eta) { return eta; });
  p.e = internal::weighted_mean(
      w, Z0, [&](double eta) { return potential(spec, eta); });
  p.tau = -lambda / beta;
  return p;
}

/* Microcanonical entropy by convex duality:
 *     S(e, v) = min_{beta, lambda} [ beta e + lambda v + log Z(beta, lambda) ].
 * Damped Newton on the gradient (e(b,l) - e, v(b,l) - v); the Hessian is
 * minus the covariance matrix of (V(eta), eta), always negative definite,
 * so the stationary point is unique when (e, v) is admissible.
 */
struct EntropyPoint {
  double S;
  double beta;
  double lambda;
};

inline EntropyPoint entropy_legendre(const PotentialSpec& spec, double e,
                                     double v) {
  const bool rotor = spec.family == PotentialFamily::kRotor;
  if (rotor && std::abs(v) > 1e-12)
    throw std::runtime_error(
        "entropy_legendre(): rotor volume must be 0, got v=" +
        std::to_string(v));

  double beta = 1.0, lambda = 0.0;
  if (spec.family == PotentialFamily::kHarmonic ||
      spec.family == PotentialFamily::kPinnedHarmonic) {
    // Closed-form Gaussian inverse; Newton below only polishes it.
    const double a = spec.alpha;
    const double spread = e - a * v * v;
    if (!(spread > 0.0))
      throw std::runtime_error(
          "entropy_legendre(): (e, v) outside the harmonic domain, needs "
          "e > alpha v^2, got e=" +
          std::to_string(e) + " v=" + std::to_string(v));
    beta = 1.0 / (2.0 * spread);
    lambda = -2.0 * a * beta * v;
  }

  double ce = 0.0, cv = 0.0;
  for (int iter = 0; iter < 120; ++iter) {
    if (!thermo_admissible(spec, beta, lambda))
      throw std::runtime_error(
          "entropy_legendre(): iterate left the admissible region");
    const internal::GibbsWeight w = internal::make_weight(spec, beta, lambda);
    const double Z0 = internal::weight_norm(w);
    auto mean = [&](auto&& g) { return internal::weighted_mean(w, Z0, g); };
    auto Vf = [&](double eta) { return potential(spec, eta); };
    ce = mean(Vf);
    cv = mean([](double eta) { return eta; });
    const double ge = ce - e;
    const double gv = cv - v;
    const double scale_e = 1.0 + std::abs(e);
    const double scale_v = 1.0 + std::abs(v);
    if (std::abs(ge) < 1e-10 * scale_e && std::abs(gv) < 1e-10 * scale_v) {
      const double logZ = std::log(Z0) - w.shift;
      return {beta * e + lambda * v + logZ, beta, lambda};
    }
    const double vee = mean([&](double x) { return Vf(x) * Vf(x); }) - ce * ce;
    const double vev = mean([&](double x) { return Vf(x) * x; }) - ce * cv;
    const double vvv = mean([](double x) { return x * x; }) - cv * cv;
    // d(e,v)/d(beta,lambda) = -[[vee, vev], [vev, vvv]].
    double det = vee * vvv - vev * vev;
    double db, dl;
    if (rotor || det <= 1e-30) {
      // Rotor: lambda pinned at 0, 1-d Newton in beta.
      db = ge / vee;
      dl = 0.0;
    } else {
      db = (vvv * ge - vev * gv) / det;
      dl = (-vev * ge + vee * gv) / det;
    }
    // Damp the step until it stays admissible.
    double t = 1.0;
    while (!thermo_admissible(spec, beta + t * db, lambda + t * dl) &&
           t > 1e-12)
      t *= 0.5;
    beta += t * db;
    lambda += t * dl;
  }
  throw std::runtime_error(
      "entropy_legendre(): Newton failed to converge for e=" +
      std::to_string(e) + " v=" + std::to_string(v));
}

}  // namespace chainflux
