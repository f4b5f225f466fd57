// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chainflux/dynamics.hpp>
#include <chainflux/gibbs.hpp>

#include <cmath>
#include <vector>

using namespace chainflux;

namespace {

ChainState random_qp(Eigen::Index n, Topology topo, std::uint64_t seed) {
  ChainState s = make_qp_chain(n, topo);
  Philox rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.q[i] = rng.normal();
    s.p[i] = rng.normal();
  }
  return s;
}

// Periodic chain in stretch coordinates drawn from the product Gibbs
// measure exp(-beta(p^2/2 + V(r)) - lambda r); invariant for the bulk
// conservative dynamics.
ChainState gibbs_rp(Eigen::Index n, const PotentialSpec& pot, double beta,
                    double lambda, std::uint64_t seed, std::uint64_t stream) {
  ChainState s = make_rp_chain(n, Topology::kPeriodic);
  Philox rng(seed, stream);
  s.r = GibbsSampler(pot, beta, lambda).sample(n, rng);
  const double sd = 1.0 / std::sqrt(beta);
  for (Eigen::Index i = 0; i < n; ++i) s.p[i] = sd * rng.normal();
  return s;
}

double total_energy(const ChainState& s, const PotentialSpec& pot) {
  return site_energies(s, pot).sum();
}

}  // namespace

TEST_CASE("velocity-verlet is time reversible") {
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  ChainState s = random_qp(32, Topology::kPeriodic, 5);
  const ChainState s0 = s;
  for (int i = 0; i < 100; ++i) step_drift(s, spec, 0.01);
  s.p = -s.p;
  for (int i = 0; i < 100; ++i) step_drift(s, spec, 0.01);
  s.p = -s.p;
  CHECK((s.q - s0.q).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((s.p - s0.p).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("verlet energy error is bounded and second order") {
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  auto drift = [&](double dt) {
    ChainState s = random_qp(32, Topology::kPeriodic, 6);
    const double e0 = total_energy(s, spec.potential);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      step_drift(s, spec, dt);
      if (i % 50 == 0)
        worst = std::max(
            worst, std::abs(total_energy(s, spec.potential) - e0) / e0);
    }
    worst =
        std::max(worst, std::abs(total_energy(s, spec.potential) - e0) / e0);
    return worst;
  };
  const double coarse = drift(0.01);
  const double fine = drift(0.005);
  CHECK(coarse < 1e-4);
  CHECK(coarse / fine > 3.0);  // symplectic error scales like dt^2
}

TEST_CASE("eta drift conserves volume exactly and energy at fourth order") {
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  auto run = [&](double dt) {
    ChainState s = make_eta_chain(64, Topology::kPeriodic);
    Philox rng(7);
    for (Eigen::Index i = 0; i < 64; ++i) s.eta[i] = rng.normal();
    const double vol0 = s.eta.sum();
    const double en0 = s.eta.squaredNorm();
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < steps; ++i) step_drift(s, spec, dt);
    return std::make_pair(std::abs(s.eta.sum() - vol0),
                          std::abs(s.eta.squaredNorm() - en0));
  };
  const auto [dvol_c, den_c] = run(0.02);
  const auto [dvol_f, den_f] = run(0.01);
  CHECK(dvol_c < 1e-12);
  CHECK(dvol_f < 1e-12);
  CHECK(den_c < 1e-7);
  CHECK(den_c / den_f > 10.0);  // global fourth order: ratio ~ 16
}

TEST_CASE("fpu eta drift also conserves both sums") {
  DynamicsSpec spec;
  spec.potential = fpu_quartic();
  ChainState s = make_eta_chain(32, Topology::kPeriodic);
  Philox rng(8);
  for (Eigen::Index i = 0; i < 32; ++i) s.eta[i] = 0.5 * rng.normal();
  const double vol0 = s.eta.sum();
  const double en0 = total_energy(s, spec.potential);
  for (int i = 0; i < 2000; ++i) step_drift(s, spec, 0.005);
  CHECK(std::abs(s.eta.sum() - vol0) < 1e-11);
  CHECK(std::abs(total_energy(s, spec.potential) - en0) < 1e-8);
}

TEST_CASE("noise events conserve their invariants exactly") {
  Philox rng(11);

  SUBCASE("velocity flips preserve every site energy") {
    DynamicsSpec spec;
    spec.potential = fpu_quartic();
    spec.noise = NoiseKind::kVelocityFlip;
    spec.gamma = 4.0;
    ChainState s = gibbs_rp(32, spec.potential, 1.0, 0.0, 12, 0);
    const Eigen::VectorXd e0 = site_energies(s, spec.potential);
    std::vector<NoiseEvent> log;
    apply_noise_events(s, spec, 5.0, rng, &log);
    CHECK(log.size() > 100);
    CHECK((site_energies(s, spec.potential) - e0).lpNorm<Eigen::Infinity>() ==
          0.0);
  }

  SUBCASE("momentum exchange is an exact permutation of momenta") {
    DynamicsSpec spec;
    spec.potential = harmonic(1.0);
    spec.noise = NoiseKind::kMomentumExchange;
    spec.gamma = 2.0;
    ChainState s = gibbs_rp(32, spec.potential, 2.0, 0.5, 13, 0);
    std::vector<double> p0(s.p.data(), s.p.data() + s.p.size());
    const Eigen::VectorXd r0 = s.r;
    apply_noise_events(s, spec, 5.0, rng);
    std::vector<double> p1(s.p.data(), s.p.data() + s.p.size());
    std::sort(p0.begin(), p0.end());
    std::sort(p1.begin(), p1.end());
    CHECK(p0 == p1);  // bit-exact permutation, so sum p and sum p^2 conserved
    CHECK((s.r - r0).norm() == 0.0);
  }

  SUBCASE("volume exchange is an exact permutation of volumes") {
    DynamicsSpec spec;
    spec.potential = exponential_kvm();
    spec.noise = NoiseKind::kVolumeExchange;
    spec.gamma = 2.0;
    ChainState s = make_eta_chain(32, Topology::kPeriodic);
    s.eta = gibbs_sample(spec.potential, 2.0, -1.0, 32, 14);
    std::vector<double> v0(s.eta.data(), s.eta.data() + s.eta.size());
    apply_noise_events(s, spec, 5.0, rng);
    std::vector<double> v1(s.eta.data(), s.eta.data() + s.eta.size());
    std::sort(v0.begin(), v0.end());
    std::sort(v1.begin(), v1.end());
    CHECK(v0 == v1);  // conserves sum eta and sum V(eta) exactly
  }
}

TEST_CASE("event counts follow the poisson law") {
  // Flip rate gamma/2 per non-bath site, exchange rate gamma per bond.
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  spec.noise = NoiseKind::kVelocityFlip;
  spec.gamma = 1.4;
  spec.baths.push_back({0, BathKind::kLangevinOU, 1.0, 1.0});
  spec.baths.push_back({15, BathKind::kLangevinOU, 1.0, 1.0});
  ChainState s = gibbs_rp(16, spec.potential, 1.0, 0.0, 15, 0);
  s.topology = Topology::kFree;  // open chain: bath sites excluded from flips
  s.r.conservativeResize(15);
  Philox rng(16);
  std::vector<NoiseEvent> log;
  const double t = 2000.0;
  apply_noise_events(s, spec, t, rng, &log);
  const double mean = 0.5 * spec.gamma * 14 * t;
  CHECK(std::abs(static_cast<double>(log.size()) - mean) <
        4.0 * std::sqrt(mean));
  // Event times must be sorted and inside the window.
  bool sorted = true;
  for (std::size_t i = 1; i < log.size(); ++i)
    sorted = sorted && log[i - 1].time <= log[i].time;
  CHECK(sorted);
  CHECK(log.front().time >= 0.0);
  CHECK(log.back().time <= t);
  // No flip may land on a thermostated site.
  bool clean = true;
  for (const auto& ev : log) clean = clean && ev.index != 0 && ev.index != 15;
  CHECK(clean);
}

TEST_CASE("ou bath matches the exact transition law") {
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  spec.baths.push_back({1, BathKind::kLangevinOU, 1.3, 0.4});
  const int reps = 20000;
  double m1 = 0, m2 = 0, m3 = 0;
  Philox rng(17);
  for (int k = 0; k < reps; ++k) {
    ChainState s = make_rp_chain(3, Topology::kFree);
    s.p[1] = 5.0;
    // Evolve the bath alone for t=10 in windows, no drift.
    for (int i = 0; i < 100; ++i) apply_baths(s, spec, 0.1, rng);
    const double x = s.p[1];
    m1 += x;
    m2 += x * x;
    m3 += x * x * x;
  }
  m1 /= reps; m2 /= reps; m3 /= reps;
  const double mean = 5.0 * std::exp(-0.4 * 10.0);
  const double var = m2 - m1 * m1;
  const double skew = (m3 - 3 * m1 * var - m1 * m1 * m1) / std::pow(var, 1.5);
  CHECK(std::abs(m1 - mean) <
        4.0 * std::sqrt(1.3 / reps));
  CHECK(std::abs(var - 1.3) < 4.0 * 1.3 * std::sqrt(2.0 / reps));
  CHECK(std::abs(skew) < 4.0 * std::sqrt(6.0 / reps));
}

TEST_CASE("overdamped bath reaches the gibbs marginal") {
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);  // stationary density exp(-eta^2/(2T))
  spec.baths.push_back({0, BathKind::kOverdampedEta, 0.8, 1.0});
  ChainState s = make_eta_chain(3, Topology::kFixed);
  Philox rng(18);
  double sum = 0, sum2 = 0;
  int count = 0;
  const double dt = 0.002;
  for (int i = 0; i < 400000; ++i) {
    apply_baths(s, spec, dt, rng);
    if (i > 50000 && i % 250 == 0) {
      sum += s.eta[0];
      sum2 += s.eta[0] * s.eta[0];
      ++count;
    }
  }
  const double var = sum2 / count - (sum / count) * (sum / count);
  // Samples 0.5 time units apart decorrelate (relaxation time 1/(2 alpha
  // coupling) = 1); allow 5 sigma on roughly independent samples plus the
  // O(dt) Euler-Maruyama bias.
  CHECK(std::abs(var - 0.8) < 0.8 * (5.0 * std::sqrt(2.0 / count) + 4 * dt));
}

TEST_CASE("equal-temperature baths equilibrate the chain") {
  const Eigen::Index n = 16;
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  spec.noise = NoiseKind::kVelocityFlip;
  spec.gamma = 1.0;
  spec.baths.push_back({0, BathKind::kLangevinOU, 1.0, 1.0});
  spec.baths.push_back({n - 1, BathKind::kLangevinOU, 1.0, 1.0});
  ChainState init = make_rp_chain(n, Topology::kForced);
  Simulator sim(init, spec, 19);
  sim.run(500.0);  // burn-in
  Eigen::VectorXd kin = Eigen::VectorXd::Zero(n);
  int count = 0;
  sim.run(4000.0,
          [&](const Simulator& s) {
            kin += s.state().p.array().square().matrix();
            ++count;
          },
          1.0);
  kin /= count;
  // Samples one time unit apart are weakly correlated; the per-site error
  // on <p^2> is about sqrt(2/count_eff). Allow a generous band.
  for (Eigen::Index x = 0; x < n; ++x) CHECK(std::abs(kin[x] - 1.0) < 0.12);
  CHECK(std::abs(kin.mean() - 1.0) < 0.03);
}

TEST_CASE("simulation is deterministic and conservative") {
  DynamicsSpec spec;
  spec.potential = fpu_quartic();
  spec.noise = NoiseKind::kMomentumExchange;
  spec.gamma = 0.7;
  ChainState init = gibbs_rp(24, spec.potential, 1.0, 0.0, 20, 3);

  Simulator a(init, spec, 77), b(init, spec, 77), c(init, spec, 78);
  a.run(5.0);
  b.run(5.0);
  c.run(5.0);
  CHECK((a.state().p - b.state().p).norm() == 0.0);
  CHECK((a.state().r - b.state().r).norm() == 0.0);
  CHECK((a.state().p - c.state().p).norm() > 0.0);

  // Isolated chain: noise conserves energy exactly, Verlet keeps the
  // Hamiltonian within its bounded oscillation.
  const double e0 = total_energy(init, spec.potential);
  CHECK(std::abs(total_energy(a.state(), spec.potential) - e0) / e0 < 1e-3);
}

TEST_CASE("gibbs product measures are invariant for matching bulk dynamics") {
  struct Setup {
    const char* name;
    PotentialSpec pot;
    NoiseKind noise;
    double beta, lambda;
  };
  const Setup setups[] = {
      {"flip-harmonic", harmonic(0.5), NoiseKind::kVelocityFlip, 1.0, 0.0},
      {"exchange-fpu", fpu_quartic(), NoiseKind::kMomentumExchange, 1.5, 0.3},
      {"volume-expkvm", exponential_kvm(), NoiseKind::kVolumeExchange, 2.0,
       -1.0},
  };
  for (const auto& su : setups) {
    CAPTURE(su.name);
    DynamicsSpec spec;
    spec.potential = su.pot;
    spec.noise = su.noise;
    spec.gamma = 1.0;
    const Eigen::Index n = 64;
    const int reps = 48;
    // Moments of the site variable at t=0 (exact sampler) vs t=10.
    Eigen::Vector4d before = Eigen::Vector4d::Zero();
    Eigen::Vector4d after = Eigen::Vector4d::Zero();
    Eigen::Vector4d se2 = Eigen::Vector4d::Zero();
    for (int k = 0; k < reps; ++k) {
      ChainState s;
      if (su.noise == NoiseKind::kVolumeExchange) {
        s = make_eta_chain(n, Topology::kPeriodic);
        s.eta = gibbs_sample(su.pot, su.beta, su.lambda, n, 300 + k);
      } else {
        s = gibbs_rp(n, su.pot, su.beta, su.lambda, 300 + k, 0);
      }
      auto moments = [&](const ChainState& st) {
        const auto& x = st.family == ChainFamily::kEtaChain ? st.eta : st.r;
        Eigen::Vector4d m;
        m[0] = x.mean();
        m[1] = x.array().square().mean();
        m[2] = x.array().cube().mean();
        m[3] = x.array().square().square().mean();
        return m;
      };
      const Eigen::Vector4d mb = moments(s);
      Simulator sim(s, spec, 9000 + k);
      sim.run(10.0);
      const Eigen::Vector4d ma = moments(sim.state());
      before += mb;
      after += ma;
      se2 += (mb - ma).cwiseAbs2();
    }
    before /= reps;
    after /= reps;
    for (int i = 0; i < 4; ++i) {
      const double sd = std::sqrt(se2[i] / reps) / std::sqrt(double(reps));
      CHECK(std::abs(before[i] - after[i]) < 4.5 * std::max(sd, 1e-6));
    }
  }
}

TEST_CASE("incompatible configurations are rejected") {
  DynamicsSpec spec;
  spec.potential = harmonic(0.5);
  spec.noise = NoiseKind::kVolumeExchange;
  spec.gamma = 1.0;
  ChainState rp = make_rp_chain(8, Topology::kPeriodic);
  CHECK_THROWS_AS(validate_dynamics(spec, rp), std::runtime_error);

  spec.noise = NoiseKind::kVelocityFlip;
  ChainState eta = make_eta_chain(8, Topology::kPeriodic);
  CHECK_THROWS_AS(validate_dynamics(spec, eta), std::runtime_error);

  spec.noise = NoiseKind::kNone;
  spec.baths.push_back({99, BathKind::kLangevinOU, 1.0, 1.0});
  CHECK_THROWS_AS(validate_dynamics(spec, rp), std::runtime_error);
  spec.baths.clear();
  spec.baths.push_back({0, BathKind::kOverdampedEta, 1.0, 1.0});
  CHECK_THROWS_AS(validate_dynamics(spec, rp), std::runtime_error);
  spec.baths.clear();
  spec.dt = 0.0;
  CHECK_THROWS_AS(validate_dynamics(spec, rp), std::runtime_error);
}

TEST_CASE("divergent states are detected") {
  DynamicsSpec spec;
  spec.potential = fpu_quartic();
  ChainState s = make_rp_chain(8, Topology::kFree);
  s.r.setConstant(1e120);
  Simulator sim(s, spec, 1);
  CHECK_THROWS_AS(sim.run(1.0), std::runtime_error);
}
