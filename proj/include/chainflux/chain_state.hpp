// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "chainflux/potentials.hpp"

namespace chainflux {

/* Microscopic configurations.
 *
 * QPChain keeps absolute positions and momenta, the natural coordinates for
 * pinned lattices. RPChain keeps inter-particle stretches and momenta; the
 * open variant with boundary tensions is the nonequilibrium workhorse, and
 * its arrays follow the generator's index ranges (N momenta, N-1 stretches,
 * stretch b sitting between sites b and b+1). EtaChain is the
 * volume-exchange model with a single field per site.
 */
enum class ChainFamily { kQPChain, kRPChain, kEtaChain };

enum class Topology {
  kPeriodic,
  kFixed,   // ends bonded to immovable walls (QPChain), open ends (EtaChain)
  kFree,    // missing boundary bonds simply dropped
  kForced,  // open chain with boundary tensions tau_l, tau_r (RPChain)
};

struct ChainState {
  ChainFamily family = ChainFamily::kRPChain;
  Topology topology = Topology::kPeriodic;
  double time = 0.0;
  Eigen::VectorXd q;    // QPChain positions
  Eigen::VectorXd p;    // QPChain / RPChain momenta
  Eigen::VectorXd r;    // RPChain stretches
  Eigen::VectorXd eta;  // EtaChain volumes

  Eigen::Index sites() const {
    switch (family) {
      case ChainFamily::kQPChain: return q.size();
      case ChainFamily::kRPChain: return p.size();
      case ChainFamily::kEtaChain: return eta.size();
    }
    return 0;
  }
};

inline ChainState make_qp_chain(Eigen::Index n, Topology topology) {
  if (n < 3)
    throw std::runtime_error("make_qp_chain(): need n >= 3, got " +
                             std::to_string(n));
  if (topology == Topology::kForced)
    throw std::runtime_error(
        "make_qp_chain(): boundary tensions require the stretch "
        "representation, use make_rp_chain()");
  ChainState s;
  s.family = ChainFamily::kQPChain;
  s.topology = topology;
  s.q = Eigen::VectorXd::Zero(n);
  s.p = Eigen::VectorXd::Zero(n);
  return s;
}

inline ChainState make_rp_chain(Eigen::Index n, Topology topology) {
  if (n < 3)
    throw std::runtime_error("make_rp_chain(): need n >= 3, got " +
                             std::to_string(n));
  if (topology == Topology::kFixed)
    throw std::runtime_error(
        "make_rp_chain(): wall attachment is not representable in stretch "
        "coordinates");
  ChainState s;
  s.family = ChainFamily::kRPChain;
  s.topology = topology;
  s.p = Eigen::VectorXd::Zero(n);
  s.r = Eigen::VectorXd::Zero(topology == Topology::kPeriodic ? n : n - 1);
  return s;
}

inline ChainState make_eta_chain(Eigen::Index n, Topology topology) {
  if (n < 3)
    throw std::runtime_error("make_eta_chain(): need n >= 3, got " +
                             std::to_string(n));
  if (topology == Topology::kForced || topology == Topology::kFree)
    throw std::runtime_error(
        "make_eta_chain(): supported topologies are Periodic and Fixed "
        "(open with boundary sites)");
  ChainState s;
  s.family = ChainFamily::kEtaChain;
  s.topology = topology;
  s.eta = Eigen::VectorXd::Zero(n);
  return s;
}

inline void validate_state(const ChainState& s) {
  auto expect = [](bool ok, const char* what) {
    if (!ok)
      throw std::runtime_error(std::string("validate_state(): ") + what);
  };
  switch (s.family) {
    case ChainFamily::kQPChain:
      expect(s.q.size() >= 3 && s.q.size() == s.p.size(),
             "QPChain needs matching q and p arrays of length >= 3");
      expect(s.r.size() == 0 && s.eta.size() == 0,
             "QPChain must not carry r or eta arrays");
      expect(s.q.allFinite() && s.p.allFinite(), "non-finite entries");
      break;
    case ChainFamily::kRPChain: {
      const Eigen::Index n = s.p.size();
      expect(n >= 3, "RPChain needs at least 3 sites");
      const Eigen::Index bonds =
          s.topology == Topology::kPeriodic ? n : n - 1;
      expect(s.r.size() == bonds,
             "RPChain stretch count must match the bond count");
      expect(s.q.size() == 0 && s.eta.size() == 0,
             "RPChain must not carry q or eta arrays");
      expect(s.r.allFinite() && s.p.allFinite(), "non-finite entries");
      break;
    }
    case ChainFamily::kEtaChain:
      expect(s.eta.size() >= 3, "EtaChain needs at least 3 sites");
      expect(s.q.size() == 0 && s.p.size() == 0 && s.r.size() == 0,
             "EtaChain carries only the eta array");
      expect(s.eta.allFinite(), "non-finite entries");
      break;
  }
}

/* Per-site energies. The stretch energy of bond b is attributed to site
 * b+1 (the bond to the left of a site), matching the index convention of
 * the open-chain generator; site 0 of an open chain carries only kinetic
 * energy. Pinning contributes nu q^2 on site for QPChain.
 */
inline Eigen::VectorXd site_energies(const ChainState& s,
                                     const PotentialSpec& pot) {
  const Eigen::Index n = s.sites();
  Eigen::VectorXd e(n);
  switch (s.family) {
    case ChainFamily::kQPChain: {
      for (Eigen::Index x = 0; x < n; ++x) {
        const double stretch =
            x > 0 ? s.q[x] - s.q[x - 1]
                  : (s.topology == Topology::kPeriodic ? s.q[0] - s.q[n - 1]
                     : s.topology == Topology::kFixed  ? s.q[0]
                                                       : 0.0);
        e[x] = 0.5 * s.p[x] * s.p[x] + pot.nu * s.q[x] * s.q[x] +
               potential(pot, stretch);
      }
      if (s.topology == Topology::kFixed)
        // Wall bond on the right has no site to its right; fold it into
        // the last site so the total is the full Hamiltonian.
        e[n - 1] += potential(pot, -s.q[n - 1]);
      break;
    }
    case ChainFamily::kRPChain:
      for (Eigen::Index x = 0; x < n; ++x) {
        e[x] = 0.5 * s.p[x] * s.p[x];
        if (x > 0)
          e[x] += potential(pot, s.r[x - 1]);
        else if (s.topology == Topology::kPeriodic)
          e[x] += potential(pot, s.r[n - 1]);
      }
      break;
    case ChainFamily::kEtaChain:
      for (Eigen::Index x = 0; x < n; ++x) e[x] = potential(pot, s.eta[x]);
      break;
  }
  return e;
}

}  // namespace chainflux
