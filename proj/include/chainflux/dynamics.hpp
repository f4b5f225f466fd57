// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainflux/chain_state.hpp"
#include "chainflux/currents.hpp"
#include "chainflux/potentials.hpp"
#include "chainflux/rng.hpp"

namespace chainflux {

struct NoiseEvent {
  double time;
  Eigen::Index index;  // site for flips, left site of the bond for exchanges
};

inline void validate_dynamics(const DynamicsSpec& spec, const ChainState& s) {
  auto fail = [](const std::string& what) {
    throw std::runtime_error("validate_dynamics(): " + what);
  };
  if (!(spec.dt > 0.0)) fail("dt must be > 0");
  if (!(spec.gamma >= 0.0)) fail("gamma must be >= 0");
  const Eigen::Index n = s.sites();
  const bool momentum = s.family != ChainFamily::kEtaChain;
  switch (spec.noise) {
    case NoiseKind::kNone:
      break;
    case NoiseKind::kVelocityFlip:
    case NoiseKind::kMomentumExchange:
      if (!momentum) fail("momentum noise requires a momentum-carrying family");
      break;
    case NoiseKind::kVolumeExchange:
      if (momentum) fail("volume exchange requires EtaChain");
      break;
  }
  for (const auto& b : spec.baths) {
    if (b.site < 0 || b.site >= n) fail("bath site out of range");
    if (!(b.temperature > 0.0)) fail("bath temperature must be > 0");
    if (!(b.coupling > 0.0)) fail("bath coupling must be > 0");
    if (b.kind == BathKind::kLangevinOU && !momentum)
      fail("Langevin baths require a momentum-carrying family");
    if (b.kind == BathKind::kOverdampedEta && momentum)
      fail("overdamped baths require EtaChain");
  }
  if (s.topology == Topology::kForced) {
    if (s.family != ChainFamily::kRPChain)
      fail("Forced topology is only defined for RPChain");
    if (n < 3) fail("Forced RPChain requires N >= 3");
  }
}

namespace internal {

// Elementwise V' over an array, kept branch-free per family so the hot
// loops vectorize.
inline void dv_profile(const PotentialSpec& pot, const Eigen::VectorXd& x,
                       Eigen::VectorXd& vp) {
  switch (pot.family) {
    case PotentialFamily::kHarmonic:
    case PotentialFamily::kPinnedHarmonic:
      vp = 2.0 * pot.alpha * x;
      break;
    case PotentialFamily::kFpuQuartic:
      vp = x.array() + x.array().cube();
      break;
    case PotentialFamily::kExponentialKvM:
      vp = 1.0 - (-x.array()).exp();
      break;
    case PotentialFamily::kRotor:
      vp = x.array().sin();
      break;
  }
}

inline void v_profile(const PotentialSpec& pot, const Eigen::VectorXd& x,
                      Eigen::VectorXd& V) {
  switch (pot.family) {
    case PotentialFamily::kHarmonic:
    case PotentialFamily::kPinnedHarmonic:
      V = pot.alpha * x.array().square();
      break;
    case PotentialFamily::kFpuQuartic:
      V = 0.5 * x.array().square() + 0.25 * x.array().square().square();
      break;
    case PotentialFamily::kExponentialKvM:
      V = (-x.array()).exp() + x.array() - 1.0;
      break;
    case PotentialFamily::kRotor:
      V = 1.0 - x.array().cos();
      break;
  }
}

// Bare drift contribution to the bond currents (no noise/bath terms), in
// ledger layout. `vp` must hold V' of the current stretches/volumes.
inline void drift_rates_rp(const ChainState& s, const DynamicsSpec& spec,
                           const Eigen::VectorXd& vp, Eigen::VectorXd& out) {
  const Eigen::Index n = s.p.size();
  if (s.topology == Topology::kPeriodic) {
    out.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index a = (k + n - 1) % n;
      out[k] = -s.p[a] * vp[a];
    }
  } else {
    out.resize(n + 1);
    out[0] = s.topology == Topology::kForced ? -spec.tau_left * s.p[0] : 0.0;
    for (Eigen::Index k = 1; k < n; ++k) out[k] = -s.p[k - 1] * vp[k - 1];
    out[n] =
        s.topology == Topology::kForced ? -spec.tau_right * s.p[n - 1] : 0.0;
  }
}

inline void drift_rates_qp(const ChainState& s, const Eigen::VectorXd& vp,
                           Eigen::VectorXd& out) {
  // vp holds V' of the bond stretches, bond b = (b, b+1 mod n).
  const Eigen::Index n = s.q.size();
  if (s.topology == Topology::kPeriodic) {
    out.resize(n);
    for (Eigen::Index k = 0; k < n; ++k)
      out[k] = -s.p[(k + n - 1) % n] * vp[(k + n - 1) % n];
  } else {
    out.setZero(n + 1);
    for (Eigen::Index k = 1; k < n; ++k) out[k] = -s.p[k - 1] * vp[k - 1];
    // Wall bonds (Fixed) do no work on the resting wall; Free has no bond.
  }
}

inline void drift_rates_eta_e(const ChainState& s, const Eigen::VectorXd& vp,
                              Eigen::VectorXd& out) {
  const Eigen::Index n = s.eta.size();
  if (s.topology == Topology::kPeriodic) {
    out.resize(n);
    out[0] = -vp[n - 1] * vp[0];
    for (Eigen::Index k = 1; k < n; ++k) out[k] = -vp[k - 1] * vp[k];
  } else {
    out.setZero(n + 1);
    for (Eigen::Index k = 1; k < n; ++k) out[k] = -vp[k - 1] * vp[k];
  }
}

inline void drift_rates_eta_v(const ChainState& s, const Eigen::VectorXd& vp,
                              Eigen::VectorXd& out) {
  const Eigen::Index n = s.eta.size();
  if (s.topology == Topology::kPeriodic) {
    out.resize(n);
    out[0] = -(vp[n - 1] + vp[0]);
    for (Eigen::Index k = 1; k < n; ++k) out[k] = -(vp[k - 1] + vp[k]);
  } else {
    out.resize(n + 1);
    out[0] = -vp[0];
    for (Eigen::Index k = 1; k < n; ++k) out[k] = -(vp[k - 1] + vp[k]);
    out[n] = -vp[n - 1];
  }
}

// Stretches of a QP chain in bond order; size n for periodic, n-1 (plus
// wall handling in the caller) otherwise.
inline void qp_stretches(const ChainState& s, Eigen::VectorXd& str) {
  const Eigen::Index n = s.q.size();
  if (s.topology == Topology::kPeriodic) {
    str.resize(n);
    str.head(n - 1) = s.q.tail(n - 1) - s.q.head(n - 1);
    str[n - 1] = s.q[0] - s.q[n - 1];
  } else {
    str = s.q.tail(n - 1) - s.q.head(n - 1);
  }
}

// Momentum forces for QPChain / RPChain at the current configuration.
inline void forces(const ChainState& s, const DynamicsSpec& spec,
                   Eigen::VectorXd& vp, Eigen::VectorXd& f) {
  const PotentialSpec& pot = spec.potential;
  if (s.family == ChainFamily::kRPChain) {
    const Eigen::Index n = s.p.size();
    dv_profile(pot, s.r, vp);
    f.resize(n);
    if (s.topology == Topology::kPeriodic) {
      f[0] = vp[0] - vp[n - 1];
      for (Eigen::Index x = 1; x < n; ++x) f[x] = vp[x] - vp[x - 1];
    } else {
      f[0] = vp[0] - (s.topology == Topology::kForced ? spec.tau_left : 0.0);
      f.segment(1, n - 2) = vp.tail(n - 2) - vp.head(n - 2);
      f[n - 1] =
          (s.topology == Topology::kForced ? spec.tau_right : 0.0) - vp[n - 2];
    }
    return;
  }
  // QPChain.
  const Eigen::Index n = s.q.size();
  Eigen::VectorXd str;
  qp_stretches(s, str);
  dv_profile(pot, str, vp);
  f.resize(n);
  if (s.topology == Topology::kPeriodic) {
    f[0] = vp[0] - vp[n - 1];
    for (Eigen::Index x = 1; x < n; ++x) f[x] = vp[x] - vp[x - 1];
  } else {
    f.segment(1, n - 2) = vp.tail(n - 2) - vp.head(n - 2);
    if (s.topology == Topology::kFixed) {
      f[0] = vp[0] - potential_force(pot, s.q[0]);
      f[n - 1] = potential_force(pot, -s.q[n - 1]) - vp[n - 2];
    } else {  // Free
      f[0] = vp[0];
      f[n - 1] = -vp[n - 2];
    }
  }
  if (pot.family == PotentialFamily::kPinnedHarmonic && pot.nu > 0.0)
    f -= 2.0 * pot.nu * s.q;
}

}  // namespace internal

/* One deterministic drift step of size h.
 *
 * Velocity-Verlet for the Hamiltonian families, classical RK4 for the
 * first-order eta flow. When a ledger is supplied the drift currents are
 * accumulated with matching order: trapezoid across the Verlet step,
 * Simpson-like stage weights inside RK4.
 */
inline void step_drift(ChainState& s, const DynamicsSpec& spec, double h,
                       CurrentLedger* ledger = nullptr) {
  if (s.family == ChainFamily::kEtaChain) {
    const Eigen::Index n = s.eta.size();
    const bool periodic = s.topology == Topology::kPeriodic;
    auto rhs = [&](const Eigen::VectorXd& eta, Eigen::VectorXd& vp,
                   Eigen::VectorXd& k) {
      internal::dv_profile(spec.potential, eta, vp);
      k.resize(n);
      if (periodic) {
        k[0] = vp[1] - vp[n - 1];
        k.segment(1, n - 2) = vp.tail(n - 2) - vp.head(n - 2);
        k[n - 1] = vp[0] - vp[n - 2];
      } else {
        k[0] = vp[1];
        k.segment(1, n - 2) = vp.tail(n - 2) - vp.head(n - 2);
        k[n - 1] = -vp[n - 2];
      }
    };
    Eigen::VectorXd vp, k1, k2, k3, k4, je, jv;
    auto stage_ledger = [&](const ChainState& stage_state, double w) {
      if (!ledger) return;
      internal::drift_rates_eta_e(stage_state, vp, je);
      internal::drift_rates_eta_v(stage_state, vp, jv);
      ledger->add_drift_e(je, w * h);
      ledger->add_drift_v(jv, w * h);
    };
    ChainState tmp = s;
    rhs(s.eta, vp, k1);
    stage_ledger(s, 1.0 / 6.0);
    tmp.eta = s.eta + 0.5 * h * k1;
    rhs(tmp.eta, vp, k2);
    stage_ledger(tmp, 1.0 / 3.0);
    tmp.eta = s.eta + 0.5 * h * k2;
    rhs(tmp.eta, vp, k3);
    stage_ledger(tmp, 1.0 / 3.0);
    tmp.eta = s.eta + h * k3;
    rhs(tmp.eta, vp, k4);
    stage_ledger(tmp, 1.0 / 6.0);
    s.eta += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return;
  }

  // Velocity-Verlet: half kick, drift, half kick.
  Eigen::VectorXd vp, f, j_before, j_after;
  internal::forces(s, spec, vp, f);
  if (ledger) {
    if (s.family == ChainFamily::kRPChain)
      internal::drift_rates_rp(s, spec, vp, j_before);
    else
      internal::drift_rates_qp(s, vp, j_before);
  }
  s.p += 0.5 * h * f;
  if (s.family == ChainFamily::kRPChain) {
    const Eigen::Index n = s.p.size();
    if (s.topology == Topology::kPeriodic) {
      s.r.head(n - 1) += h * (s.p.tail(n - 1) - s.p.head(n - 1));
      s.r[n - 1] += h * (s.p[0] - s.p[n - 1]);
    } else {
      s.r += h * (s.p.tail(n - 1) - s.p.head(n - 1));
    }
  } else {
    s.q += h * s.p;
  }
  internal::forces(s, spec, vp, f);
  s.p += 0.5 * h * f;
  if (ledger) {
    if (s.family == ChainFamily::kRPChain)
      internal::drift_rates_rp(s, spec, vp, j_after);
    else
      internal::drift_rates_qp(s, vp, j_after);
    ledger->add_drift_e(j_before, 0.5 * h);
    ledger->add_drift_e(j_after, 0.5 * h);
  }
}

/* Precomputed event schedule metadata: which sites (flips) or bonds
 * (exchanges) are eligible and the aggregated Poisson rate over them.
 * Flips act on every site that does not carry a bath, matching the
 * open-chain generator; exchanges act on every bond.
 */
struct NoisePlan {
  std::vector<Eigen::Index> items;
  double total_rate = 0.0;
};

inline NoisePlan make_noise_plan(const DynamicsSpec& spec,
                                 const ChainState& s) {
  NoisePlan plan;
  if (spec.noise == NoiseKind::kNone || spec.gamma == 0.0) return plan;
  const Eigen::Index n = s.sites();
  if (spec.noise == NoiseKind::kVelocityFlip) {
    for (Eigen::Index x = 0; x < n; ++x) {
      bool bathed = false;
      for (const auto& b : spec.baths) bathed = bathed || b.site == x;
      if (!bathed) plan.items.push_back(x);
    }
    plan.total_rate = 0.5 * spec.gamma * static_cast<double>(plan.items.size());
  } else {
    const Eigen::Index bonds =
        s.topology == Topology::kPeriodic ? n : n - 1;
    for (Eigen::Index b = 0; b < bonds; ++b) plan.items.push_back(b);
    plan.total_rate = spec.gamma * static_cast<double>(bonds);
  }
  return plan;
}

/* Conservative noise events over one window.
 *
 * A single aggregated Poisson clock at the total rate; event times are
 * exact (exponential gaps), sites/bonds uniform. Transfers are recorded in
 * the ledger exactly, so they cancel in the conservation identity by
 * construction.
 */
inline void apply_noise_events(ChainState& s, const DynamicsSpec& spec,
                               const NoisePlan& plan, double window,
                               Philox& rng,
                               std::vector<NoiseEvent>* log = nullptr,
                               CurrentLedger* ledger = nullptr) {
  if (plan.items.empty() || plan.total_rate <= 0.0) return;
  const Eigen::Index n = s.sites();
  const bool periodic = s.topology == Topology::kPeriodic;
  const auto count = static_cast<double>(plan.items.size());
  double t = rng.exponential(plan.total_rate);

  if (spec.noise == NoiseKind::kVelocityFlip) {
    while (t < window) {
      const Eigen::Index x =
          plan.items[static_cast<Eigen::Index>(rng.uniform() * count)];
      s.p[x] = -s.p[x];
      if (log) log->push_back({s.time + t, x});
      t += rng.exponential(plan.total_rate);
    }
    return;
  }

  // Exchange noises: bond b couples sites (b, b+1 mod n).
  while (t < window) {
    const Eigen::Index b =
        plan.items[static_cast<Eigen::Index>(rng.uniform() * count)];
    const Eigen::Index a = b, c = (b + 1) % n;
    // Ledger entry of the bond between sites a and c.
    const Eigen::Index k = periodic ? c : b + 1;
    if (spec.noise == NoiseKind::kMomentumExchange) {
      if (ledger)
        ledger->add_jump_e(k, 0.5 * (s.p[a] * s.p[a] - s.p[c] * s.p[c]));
      std::swap(s.p[a], s.p[c]);
    } else {  // VolumeExchange
      if (ledger) {
        ledger->add_jump_e(k, potential(spec.potential, s.eta[a]) -
                                  potential(spec.potential, s.eta[c]));
        ledger->add_jump_v(k, s.eta[a] - s.eta[c]);
      }
      std::swap(s.eta[a], s.eta[c]);
    }
    if (log) log->push_back({s.time + t, b});
    t += rng.exponential(plan.total_rate);
  }
}

inline void apply_noise_events(ChainState& s, const DynamicsSpec& spec,
                               double window, Philox& rng,
                               std::vector<NoiseEvent>* log = nullptr,
                               CurrentLedger* ledger = nullptr) {
  apply_noise_events(s, spec, make_noise_plan(spec, s), window, rng, log,
                     ledger);
}

/* Thermostats over one window.
 *
 * Langevin baths use the exact Ornstein-Uhlenbeck transition, so the bath
 * marginal is sampled without time-step error; overdamped eta baths use
 * Euler-Maruyama. Reservoir transfers are recorded on the boundary ledger
 * entries (baths at interior sites are legal for dynamics but are not
 * representable in the two-reservoir ledger).
 */
inline void apply_baths(ChainState& s, const DynamicsSpec& spec, double dt,
                        Philox& rng, CurrentLedger* ledger = nullptr) {
  const Eigen::Index n = s.sites();
  for (const auto& b : spec.baths) {
    const Eigen::Index k = b.site == 0 ? 0 : n;
    const double sgn = b.site == 0 ? 1.0 : -1.0;
    const bool edge = b.site == 0 || b.site == n - 1;
    if (b.kind == BathKind::kLangevinOU) {
      const double a = std::exp(-b.coupling * dt);
      const double noise =
          std::sqrt(b.temperature * (1.0 - a * a)) * rng.normal();
      const double before = s.p[b.site];
      s.p[b.site] = a * before + noise;
      if (ledger && edge)
        ledger->add_jump_e(
            k, sgn * 0.5 * (s.p[b.site] * s.p[b.site] - before * before));
    } else {
      const double before = s.eta[b.site];
      const double drift =
          -b.coupling * potential_force(spec.potential, before);
      s.eta[b.site] =
          before + drift * dt +
          std::sqrt(2.0 * b.coupling * b.temperature * dt) * rng.normal();
      if (ledger && edge) {
        ledger->add_jump_e(k, sgn * (potential(spec.potential, s.eta[b.site]) -
                                     potential(spec.potential, before)));
        ledger->add_jump_v(k, sgn * (s.eta[b.site] - before));
      }
    }
  }
}

/* Strang-split stochastic integrator with replica-stream RNG.
 *
 * Window layout: drift(dt/2) -> noise events + baths (dt) -> drift(dt/2).
 * Everything is deterministic given (seed, stream, config).
 */
class Simulator {
 public:
  Simulator(ChainState initial, DynamicsSpec spec, std::uint64_t seed,
            std::uint64_t stream = 0, bool with_ledger = false)
      : state_(std::move(initial)), spec_(std::move(spec)), rng_(seed, stream) {
    validate_state(state_);
    validate_dynamics(spec_, state_);
    plan_ = make_noise_plan(spec_, state_);
    if (with_ledger) ledger_.emplace(state_, spec_);
  }

  ChainState& state() { return state_; }
  const ChainState& state() const { return state_; }
  const DynamicsSpec& spec() const { return spec_; }
  Philox& rng() { return rng_; }
  CurrentLedger* ledger() { return ledger_ ? &*ledger_ : nullptr; }
  void reset_ledger() {
    if (ledger_) ledger_->reset(state_, spec_);
  }
  void set_event_log(std::vector<NoiseEvent>* sink) { event_log_ = sink; }

  void window(double dt) {
    CurrentLedger* led = ledger_ ? &*ledger_ : nullptr;
    step_drift(state_, spec_, 0.5 * dt, led);
    apply_noise_events(state_, spec_, plan_, dt, rng_, event_log_, led);
    apply_baths(state_, spec_, dt, rng_, led);
    step_drift(state_, spec_, 0.5 * dt, led);
    state_.time += dt;
    if (++since_check_ >= 16) {
      since_check_ = 0;
      const bool ok = state_.q.allFinite() && state_.p.allFinite() &&
                      state_.r.allFinite() && state_.eta.allFinite();
      if (!ok)
        throw std::runtime_error(
            "Simulator: state left the representable range at t=" +
            std::to_string(state_.time));
    }
  }

  // Advance by `horizon`, invoking `snapshot` every `stride` time units.
  // A non-positive stride disables snapshots. Horizons that are not a
  // multiple of dt get one final shortened window.
  void run(double horizon,
           const std::function<void(const Simulator&)>& snapshot = nullptr,
           double stride = 0.0) {
    if (!(horizon >= 0.0))
      throw std::runtime_error("Simulator::run(): horizon must be >= 0");
    const double dt = spec_.dt;
    auto windows = static_cast<long long>(horizon / dt + 1e-9);
    const double remainder = horizon - static_cast<double>(windows) * dt;
    const long long per_snap =
        stride > 0.0 ? std::max(1LL, static_cast<long long>(
                                         std::llround(stride / dt)))
                     : 0;
    for (long long i = 0; i < windows; ++i) {
      window(dt);
      if (per_snap && snapshot && (i + 1) % per_snap == 0) snapshot(*this);
    }
    if (remainder > 1e-9 * std::max(1.0, horizon)) window(remainder);
  }

 private:
  ChainState state_;
  DynamicsSpec spec_;
  Philox rng_;
  NoisePlan plan_;
  std::optional<CurrentLedger> ledger_;
  std::vector<NoiseEvent>* event_log_ = nullptr;
  int since_check_ = 0;
};

}  // namespace chainflux
