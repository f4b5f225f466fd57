// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "chainflux/chain_state.hpp"
#include "chainflux/potentials.hpp"

namespace chainflux {

enum class NoiseKind { kNone, kVelocityFlip, kMomentumExchange, kVolumeExchange };
enum class BathKind { kLangevinOU, kOverdampedEta };

struct BathSpec {
  Eigen::Index site;
  BathKind kind;
  double temperature;
  double coupling;
};

struct DynamicsSpec {
  PotentialSpec potential;
  NoiseKind noise = NoiseKind::kNone;
  double gamma = 0.0;  // flip rate gamma/2 per site, exchange rate gamma per bond
  std::vector<BathSpec> baths;
  double tau_left = 0.0;   // boundary tensions, Forced topology only
  double tau_right = 0.0;
  double dt = 0.01;
};

/* Instantaneous bond currents.
 *
 * Entry k is the current through the bond just left of site k, positive
 * rightward. Open chains have n+1 entries whose ends are the reservoir
 * bonds; periodic chains have n entries with entry 0 the wrap-around bond.
 * Conservation reads d(energy of site x)/dt = e[x] - e[x+1].
 *
 * The exchange-noise contribution to the mean energy current is the jump
 * -grad(p^2/2) (resp. -grad V, -grad eta) times the bond rate gamma; energy
 * then flows from hot to cold, which is also the unique form under which
 * the pathwise ledger telescopes.
 */
struct BondCurrents {
  Eigen::VectorXd e;
  Eigen::VectorXd v;  // EtaChain only, empty otherwise
};

inline BondCurrents bond_currents(const ChainState& s,
                                  const DynamicsSpec& spec) {
  const Eigen::Index n = s.sites();
  const bool periodic = s.topology == Topology::kPeriodic;
  const PotentialSpec& pot = spec.potential;
  BondCurrents out;

  if (s.family == ChainFamily::kEtaChain) {
    if (spec.noise == NoiseKind::kVelocityFlip ||
        spec.noise == NoiseKind::kMomentumExchange)
      throw std::runtime_error(
          "bond_currents(): momentum noise is incompatible with EtaChain");
    const double g = spec.noise == NoiseKind::kVolumeExchange ? spec.gamma : 0.0;
    Eigen::VectorXd vp(n), V(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      const auto pv = potential_eval(pot, s.eta[x]);
      vp[x] = pv.dV;
      V[x] = pv.V;
    }
    const Eigen::Index m = periodic ? n : n + 1;
    out.e.setZero(m);
    out.v.setZero(m);
    auto bond = [&](Eigen::Index k, Eigen::Index a, Eigen::Index b) {
      out.e[k] = -vp[a] * vp[b] - g * (V[b] - V[a]);
      out.v[k] = -(vp[a] + vp[b]) - g * (s.eta[b] - s.eta[a]);
    };
    for (Eigen::Index k = 1; k < n; ++k) bond(k, k - 1, k);
    if (periodic) {
      bond(0, n - 1, 0);
    } else {
      // Open ends: the drift leaks volume but not energy through the
      // boundary; thermostats add their mean exchange rates.
      out.v[0] = -vp[0];
      out.v[n] = -vp[n - 1];
      for (const auto& b : spec.baths) {
        if (b.kind != BathKind::kOverdampedEta) continue;
        const Eigen::Index k = b.site == 0 ? 0 : n;
        const double sgn = b.site == 0 ? 1.0 : -1.0;
        const auto pv = potential_eval(pot, s.eta[b.site]);
        out.e[k] += sgn * b.coupling *
                    (b.temperature * pv.d2V - pv.dV * pv.dV);
        out.v[k] += sgn * (-b.coupling * pv.dV);
      }
    }
    return out;
  }

  // Momentum-carrying families.
  if (spec.noise == NoiseKind::kVolumeExchange)
    throw std::runtime_error(
        "bond_currents(): volume exchange requires EtaChain");
  const double g =
      spec.noise == NoiseKind::kMomentumExchange ? spec.gamma : 0.0;
  auto stretch = [&](Eigen::Index b) -> double {
    // Stretch of the bond (b, b+1 mod n).
    if (s.family == ChainFamily::kRPChain) return s.r[b];
    const Eigen::Index bn = (b + 1) % n;
    if (periodic) return s.q[bn] - s.q[b];
    return s.q[b + 1] - s.q[b];
  };
  const Eigen::Index m = periodic ? n : n + 1;
  out.e.setZero(m);
  auto bond = [&](Eigen::Index k, Eigen::Index a, Eigen::Index b) {
    out.e[k] = -s.p[a] * potential_force(pot, stretch(a)) +
               0.5 * g * (s.p[a] * s.p[a] - s.p[b] * s.p[b]);
  };
  for (Eigen::Index k = 1; k < n; ++k) bond(k, k - 1, k);
  if (periodic) {
    bond(0, n - 1, 0);
  } else {
    if (s.topology == Topology::kForced) {
      out.e[0] = -spec.tau_left * s.p[0];
      out.e[n] = -spec.tau_right * s.p[n - 1];
    }
    for (const auto& b : spec.baths) {
      if (b.kind != BathKind::kLangevinOU) continue;
      if (b.site != 0 && b.site != n - 1) continue;
      const Eigen::Index k = b.site == 0 ? 0 : n;
      const double sgn = b.site == 0 ? 1.0 : -1.0;
      out.e[k] += sgn * b.coupling *
                  (b.temperature - s.p[b.site] * s.p[b.site]);
    }
  }
  return out;
}

/* Pathwise accumulated currents since construction (or reset).
 *
 * Same bond indexing as BondCurrents. The drift part is integrated with
 * the order of the integrator feeding it (trapezoid around Verlet substeps,
 * stage-weighted quadrature inside RK4); noise and bath transfers are
 * recorded exactly per event, so the discrete conservation law
 *     energy_x(t) - energy_x(0) = J[x] - J[x+1]
 * holds up to the integrator's quadrature error only.
 */
class CurrentLedger {
 public:
  CurrentLedger(const ChainState& s, const DynamicsSpec& spec)
      : periodic_(s.topology == Topology::kPeriodic),
        entries_(periodic_ ? s.sites() : s.sites() + 1) {
    drift_e_.setZero(entries_);
    jump_e_.setZero(entries_);
    if (s.family == ChainFamily::kEtaChain) {
      drift_v_.setZero(entries_);
      jump_v_.setZero(entries_);
      v0_ = s.eta;
    }
    e0_ = site_energies(s, spec.potential);
    t0_ = s.time;
  }

  void reset(const ChainState& s, const DynamicsSpec& spec) {
    *this = CurrentLedger(s, spec);
  }

  // Hooks used by the integrators and event machinery.
  void add_drift_e(const Eigen::VectorXd& rates, double weight) {
    drift_e_ += weight * rates;
  }
  void add_drift_v(const Eigen::VectorXd& rates, double weight) {
    drift_v_ += weight * rates;
  }
  void add_jump_e(Eigen::Index k, double transfer) { jump_e_[k] += transfer; }
  void add_jump_v(Eigen::Index k, double transfer) { jump_v_[k] += transfer; }

  Eigen::VectorXd total_e() const { return drift_e_ + jump_e_; }
  Eigen::VectorXd total_v() const { return drift_v_ + jump_v_; }
  const Eigen::VectorXd& drift_e() const { return drift_e_; }
  const Eigen::VectorXd& jump_e() const { return jump_e_; }
  double elapsed(const ChainState& s) const { return s.time - t0_; }

  // Max-norm violation of the conservation law at the current state.
  double conservation_residual_e(const ChainState& s,
                                 const DynamicsSpec& spec) const {
    const Eigen::VectorXd e = site_energies(s, spec.potential);
    const Eigen::VectorXd J = total_e();
    double worst = 0.0;
    for (Eigen::Index x = 0; x < e.size(); ++x) {
      const double in = J[x];
      const double outflux = periodic_ ? J[(x + 1) % e.size()] : J[x + 1];
      worst = std::max(worst, std::abs(e[x] - e0_[x] - (in - outflux)));
    }
    return worst;
  }

  double conservation_residual_v(const ChainState& s) const {
    if (v0_.size() == 0)
      throw std::runtime_error(
          "CurrentLedger::conservation_residual_v(): no volume ledger for "
          "this family");
    const Eigen::VectorXd J = total_v();
    double worst = 0.0;
    for (Eigen::Index x = 0; x < v0_.size(); ++x) {
      const double in = J[x];
      const double outflux = periodic_ ? J[(x + 1) % v0_.size()] : J[x + 1];
      worst = std::max(worst, std::abs(s.eta[x] - v0_[x] - (in - outflux)));
    }
    return worst;
  }

 private:
  bool periodic_;
  Eigen::Index entries_;
  Eigen::VectorXd drift_e_, jump_e_, drift_v_, jump_v_;
  Eigen::VectorXd e0_, v0_;
  double t0_ = 0.0;
};

}  // namespace chainflux
