// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace chainflux {

/* Interaction potentials between neighbouring sites.
 *
 * Every family is normalized so min V = 0. The pinned family shares the
 * harmonic pair potential; its nu multiplies an on-site q^2 term that only
 * the dynamics and the current autocorrelation see, so the spec object
 * carries it alongside the pair stiffness.
 */
enum class PotentialFamily {
  kHarmonic,        // V(r) = alpha r^2
  kPinnedHarmonic,  // pair part alpha r^2, on-site pinning nu q^2
  kFpuQuartic,      // V(r) = r^2/2 + r^4/4
  kExponentialKvM,  // V(r) = e^{-r} + r - 1
  kRotor,           // V(r) = 1 - cos r, r on the circle
};

struct PotentialSpec {
  PotentialFamily family = PotentialFamily::kHarmonic;
  double alpha = 0.5;  // stiffness of the harmonic families
  double nu = 0.0;     // pinning strength, >= 0
};

inline PotentialSpec harmonic(double alpha) {
  if (!(alpha > 0.0))
    throw std::runtime_error("harmonic(): alpha must be > 0, got " +
                             std::to_string(alpha));
  return {PotentialFamily::kHarmonic, alpha, 0.0};
}

inline PotentialSpec pinned_harmonic(double alpha, double nu) {
  if (!(alpha > 0.0) || !(nu >= 0.0))
    throw std::runtime_error(
        "pinned_harmonic(): requires alpha > 0 and nu >= 0, got alpha=" +
        std::to_string(alpha) + " nu=" + std::to_string(nu));
  return {PotentialFamily::kPinnedHarmonic, alpha, nu};
}

inline PotentialSpec fpu_quartic() {
  return {PotentialFamily::kFpuQuartic, 0.0, 0.0};
}

inline PotentialSpec exponential_kvm() {
  return {PotentialFamily::kExponentialKvM, 0.0, 0.0};
}

inline PotentialSpec rotor() { return {PotentialFamily::kRotor, 0.0, 0.0}; }

inline const char* family_name(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::kHarmonic: return "harmonic";
    case PotentialFamily::kPinnedHarmonic: return "pinned-harmonic";
    case PotentialFamily::kFpuQuartic: return "fpu-quartic";
    case PotentialFamily::kExponentialKvM: return "exponential-kvm";
    case PotentialFamily::kRotor: return "rotor";
  }
  return "unknown";
}

struct PotentialValue {
  double V;
  double dV;
  double d2V;
};

inline PotentialValue potential_eval(const PotentialSpec& spec, double r) {
  switch (spec.family) {
    case PotentialFamily::kHarmonic:
    case PotentialFamily::kPinnedHarmonic:
      return {spec.alpha * r * r, 2.0 * spec.alpha * r, 2.0 * spec.alpha};
    case PotentialFamily::kFpuQuartic:
      return {0.5 * r * r + 0.25 * r * r * r * r, r + r * r * r,
              1.0 + 3.0 * r * r};
    case PotentialFamily::kExponentialKvM: {
      const double ex = std::exp(-r);
      return {ex + r - 1.0, 1.0 - ex, ex};
    }
    case PotentialFamily::kRotor:
      return {1.0 - std::cos(r), std::sin(r), std::cos(r)};
  }
  throw std::runtime_error("potential_eval(): unknown family");
}

// Hot-path scalar versions used inside integrator loops.
inline double potential(const PotentialSpec& spec, double r) {
  return potential_eval(spec, r).V;
}
inline double potential_force(const PotentialSpec& spec, double r) {
  return potential_eval(spec, r).dV;
}

}  // namespace chainflux
