// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#include <CLI11.hpp>
#include <json.hpp>

#include <chainflux/chain_state.hpp>
#include <chainflux/config.hpp>
#include <chainflux/csv.hpp>
#include <chainflux/currents.hpp>
#include <chainflux/dynamics.hpp>
#include <chainflux/fractional_kernel.hpp>
#include <chainflux/gibbs.hpp>
#include <chainflux/harmonic_exact.hpp>
#include <chainflux/observables.hpp>
#include <chainflux/pde.hpp>
#include <chainflux/potentials.hpp>
#include <chainflux/quasipotential.hpp>
#include <chainflux/rng.hpp>
#include <chainflux/thermodynamics.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace chainflux;
namespace fs = std::filesystem;

[[noreturn]] void config_fail(const std::string& what) {
  throw std::runtime_error(what + " (ConfigInvalid)");
}

// Shared run parameters every experiment understands.
const std::set<std::string> kCommonKeys = {"experiment", "run.seed",
                                           "run.replicas", "run.threads"};

std::set<std::string> with_common(std::set<std::string> keys) {
  keys.insert(kCommonKeys.begin(), kCommonKeys.end());
  return keys;
}

const std::set<std::string> kPotentialKeys = {
    "potential.family", "potential.alpha", "potential.pinning"};

PotentialSpec potential_from(const Config& cfg) {
  const std::string family = cfg.get_string("potential.family", "harmonic");
  const double alpha = cfg.get_double("potential.alpha", 0.5);
  if (family == "harmonic") return harmonic(alpha);
  if (family == "pinned-harmonic")
    return pinned_harmonic(alpha, cfg.get_double("potential.pinning", 1.0));
  if (family == "fpu-quartic") return fpu_quartic();
  if (family == "exponential") return exponential_kvm();
  if (family == "rotor") return rotor();
  config_fail("potential.family '" + family +
              "' is not one of harmonic, pinned-harmonic, fpu-quartic, "
              "exponential, rotor");
}

NoiseKind noise_from(const Config& cfg, const std::string& fallback) {
  const std::string kind = cfg.get_string("noise.kind", fallback);
  if (kind == "none") return NoiseKind::kNone;
  if (kind == "flip") return NoiseKind::kVelocityFlip;
  if (kind == "exchange") return NoiseKind::kMomentumExchange;
  if (kind == "volume") return NoiseKind::kVolumeExchange;
  config_fail("noise.kind '" + kind +
              "' is not one of none, flip, exchange, volume");
}

ChainFamily family_from(const Config& cfg, const std::string& fallback) {
  const std::string family = cfg.get_string("chain.family", fallback);
  if (family == "qp") return ChainFamily::kQPChain;
  if (family == "rp") return ChainFamily::kRPChain;
  if (family == "eta") return ChainFamily::kEtaChain;
  config_fail("chain.family '" + family + "' is not one of qp, rp, eta");
}

Topology topology_from(const Config& cfg, const std::string& fallback) {
  const std::string topo = cfg.get_string("chain.topology", fallback);
  if (topo == "periodic") return Topology::kPeriodic;
  if (topo == "fixed") return Topology::kFixed;
  if (topo == "free") return Topology::kFree;
  if (topo == "forced") return Topology::kForced;
  config_fail("chain.topology '" + topo +
              "' is not one of periodic, fixed, free, forced");
}

double positive(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0)) config_fail("config field '" + key + "' must be > 0");
  return v;
}

Eigen::Index checked_sites(const Config& cfg, const std::string& key,
                           Eigen::Index fallback, Eigen::Index minimum) {
  const std::int64_t n = cfg.get_int(key, fallback);
  if (n < minimum)
    config_fail("config field '" + key + "' must be >= " +
                std::to_string(minimum));
  return n;
}

// ---------------------------------------------------------------------
// Experiment implementations. Each validates its key set, writes CSV
// artifacts under `out`, and returns the fields for the summary record.
// ---------------------------------------------------------------------

json run_gibbs_sample(const Config& cfg, const fs::path& out,
                      std::uint64_t seed, int replicas) {
  std::set<std::string> keys = kPotentialKeys;
  keys.insert({"state.beta", "state.lambda", "chain.n"});
  cfg.require_known(with_common(keys));
  const PotentialSpec pot = potential_from(cfg);
  const Eigen::Index n = checked_sites(cfg, "chain.n", 64, 1);
  const double beta = positive(cfg, "state.beta", 1.0);
  const double lambda = cfg.get_double("state.lambda", 0.0);
  if (!thermo_admissible(pot, beta, lambda))
    config_fail("state.beta/state.lambda leave the admissible domain of " +
                std::string(family_name(pot.family)));

  std::vector<std::vector<std::string>> rows;
  double grand_stretch = 0.0, grand_potential = 0.0;
  for (int rep = 0; rep < replicas; ++rep) {
    const Eigen::VectorXd r =
        gibbs_sample(pot, beta, lambda, n, seed, static_cast<std::uint64_t>(rep));
    double mean_pot = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean_pot += potential(pot, r[i]);
    mean_pot /= static_cast<double>(n);
    const double mean_r = r.mean();
    const double var_r =
        (r.array() - mean_r).square().sum() / static_cast<double>(n);
    rows.push_back({csv_cell(static_cast<std::int64_t>(rep)),
                    csv_cell(mean_r), csv_cell(mean_pot), csv_cell(var_r)});
    grand_stretch += mean_r / replicas;
    grand_potential += mean_pot / replicas;
  }
  write_csv(out / "samples.csv",
            {"replica", "mean_stretch", "mean_potential", "var_stretch"},
            rows);

  const ThermoPoint exact = thermo_functions(pot, beta, lambda);
  return {{"sites", n},
          {"mean_stretch", grand_stretch},
          {"mean_potential", grand_potential},
          {"exact_stretch", exact.v},
          {"exact_energy", exact.e},
          {"exact_tension", exact.tau},
          {"outputs", {"samples.csv"}}};
}

json run_simulate(const Config& cfg, const fs::path& out, std::uint64_t seed,
                  int /*replicas*/) {
  std::set<std::string> keys = kPotentialKeys;
  keys.insert({"chain.family", "chain.n", "chain.topology", "noise.kind",
               "noise.gamma", "init.temperature", "sim.dt", "sim.horizon",
               "sim.snapshots", "sim.log_events"});
  cfg.require_known(with_common(keys));
  const ChainFamily family = family_from(cfg, "eta");
  const Topology topology = topology_from(cfg, "periodic");
  const Eigen::Index n = checked_sites(cfg, "chain.n", 64, 3);
  const PotentialSpec pot = potential_from(cfg);
  const NoiseKind noise = noise_from(cfg, "volume");
  const double gamma = cfg.get_double("noise.gamma", 1.0);
  if (gamma < 0.0) config_fail("config field 'noise.gamma' must be >= 0");
  const double temperature = positive(cfg, "init.temperature", 1.0);
  const double dt = positive(cfg, "sim.dt", 0.01);
  const double horizon = positive(cfg, "sim.horizon", 10.0);
  const Eigen::Index snapshots = checked_sites(cfg, "sim.snapshots", 20, 1);
  const bool log_events = cfg.get_int("sim.log_events", 1) != 0;

  DynamicsSpec spec;
  spec.potential = pot;
  spec.noise = noise;
  spec.gamma = gamma;
  spec.dt = dt;

  ChainState state;
  const std::uint64_t init_stream = 0x696e6974;  // distinct from replica 0
  Philox init_rng(seed, init_stream);
  switch (family) {
    case ChainFamily::kQPChain:
      state = make_qp_chain(n, topology);
      for (Eigen::Index i = 0; i < n; ++i)
        state.p[i] = std::sqrt(temperature) * init_rng.normal();
      break;
    case ChainFamily::kRPChain:
      state = make_rp_chain(n, topology);
      state.r = gibbs_sample(pot, 1.0 / temperature, 0.0, state.r.size(),
                             seed, init_stream + 1);
      for (Eigen::Index i = 0; i < state.p.size(); ++i)
        state.p[i] = std::sqrt(temperature) * init_rng.normal();
      break;
    case ChainFamily::kEtaChain:
      state = make_eta_chain(n, topology);
      state.eta = gibbs_sample(pot, 1.0 / temperature, 0.0, n, seed,
                               init_stream + 1);
      break;
  }

  Simulator sim(state, spec, seed, 0, true);
  std::vector<NoiseEvent> events;
  if (log_events) sim.set_event_log(&events);

  std::vector<std::vector<std::string>> rows;
  auto record = [&](const Simulator& s) {
    const ChainState& c = s.state();
    const double energy = site_energies(c, pot).sum();
    const double momentum = c.p.size() ? c.p.sum() : 0.0;
    const double volume = c.eta.size() ? c.eta.sum()
                          : c.r.size() ? c.r.sum()
                                       : 0.0;
    rows.push_back({csv_cell(c.time), csv_cell(energy), csv_cell(momentum),
                    csv_cell(volume)});
  };
  record(sim);
  const double first_energy = site_energies(sim.state(), pot).sum();
  sim.run(horizon, record, horizon / static_cast<double>(snapshots));
  if (rows.size() < 2) record(sim);
  write_csv(out / "trajectory.csv",
            {"time", "total_energy", "total_momentum", "total_volume"}, rows);

  const Eigen::VectorXd site_e = site_energies(sim.state(), pot);
  std::vector<std::vector<std::string>> profile;
  for (Eigen::Index i = 0; i < site_e.size(); ++i)
    profile.push_back(
        {csv_cell(static_cast<std::int64_t>(i)), csv_cell(site_e[i])});
  write_csv(out / "profile.csv", {"site", "energy"}, profile);

  return {{"sites", n},
          {"windows", static_cast<std::int64_t>(
                          std::llround(horizon / dt))},
          {"noise_events", static_cast<std::int64_t>(events.size())},
          {"final_time", sim.state().time},
          {"energy_drift", std::abs(site_e.sum() - first_energy)},
          {"outputs", {"trajectory.csv", "profile.csv"}}};
}

json run_ness_scan(const Config& cfg, const fs::path& out, std::uint64_t seed,
                   int replicas) {
  std::set<std::string> keys = kPotentialKeys;
  keys.insert({"scan.n_list", "chain.family", "noise.kind", "noise.gamma",
               "bath.kind", "bath.t_left", "bath.t_right", "bath.tau_left",
               "bath.tau_right", "bath.coupling", "sim.dt", "sim.t_measure"});
  cfg.require_known(with_common(keys));

  std::vector<Eigen::Index> sizes;
  for (double v : cfg.get_double_list("scan.n_list")) {
    const auto n = static_cast<Eigen::Index>(v);
    if (static_cast<double>(n) != v || n < 3)
      config_fail("scan.n_list entries must be integers >= 3 (a stationary "
                  "profile needs at least one interior site)");
    sizes.push_back(n);
  }
  if (sizes.empty()) config_fail("scan.n_list must not be empty");

  NessConfig nc;
  nc.family = family_from(cfg, "eta");
  nc.topology = Topology::kFixed;
  nc.potential = potential_from(cfg);
  nc.noise = noise_from(cfg, "volume");
  nc.gamma = cfg.get_double("noise.gamma", 1.0);
  if (nc.gamma < 0.0) config_fail("config field 'noise.gamma' must be >= 0");
  const std::string bath = cfg.get_string("bath.kind", "overdamped");
  if (bath == "overdamped")
    nc.bath = BathKind::kOverdampedEta;
  else if (bath == "langevin")
    nc.bath = BathKind::kLangevinOU;
  else
    config_fail("bath.kind '" + bath + "' is not one of overdamped, langevin");
  nc.t_left = positive(cfg, "bath.t_left", 1.1);
  nc.t_right = positive(cfg, "bath.t_right", 0.9);
  nc.coupling = positive(cfg, "bath.coupling", 1.0);
  nc.tau_left = cfg.get_double("bath.tau_left", 0.0);
  nc.tau_right = cfg.get_double("bath.tau_right", 0.0);
  nc.dt = positive(cfg, "sim.dt", 0.01);
  nc.t_measure = positive(cfg, "sim.t_measure", 2e4);
  nc.replicas = replicas;
  nc.seed = seed;

  const std::vector<NessPoint> points = ness_scan(nc, sizes);
  std::vector<std::vector<std::string>> rows;
  for (const NessPoint& p : points)
    rows.push_back({csv_cell(static_cast<std::int64_t>(p.n)),
                    csv_cell(p.current), csv_cell(p.std_error)});
  write_csv(out / "scan.csv", {"n", "current", "std_error"}, rows);

  json detail = {{"points", static_cast<std::int64_t>(points.size())},
                 {"outputs", {"scan.csv"}}};
  bool fittable = points.size() >= 3;
  for (const NessPoint& p : points) fittable = fittable && p.current > 0.0;
  if (fittable) {
    const ExponentFit fit = fit_exponent(points, seed);
    detail["delta"] = fit.delta;
    detail["delta_std_error"] = fit.std_error;
    detail["curvature_flagged"] = fit.curvature_flagged;
    detail["points_used"] = static_cast<std::int64_t>(fit.points_used);
  }
  return detail;
}

json run_green_kubo(const Config& cfg, const fs::path& out,
                    std::uint64_t /*seed*/, int /*replicas*/) {
  cfg.require_known(with_common({"mode.nu", "mode.gamma", "mode.alpha",
                                 "mode.dimension", "mode.temperature",
                                 "time.min", "time.max", "time.points",
                                 "chain.n"}));
  const double nu = cfg.get_double("mode.nu", 0.0);
  if (nu < 0.0) config_fail("config field 'mode.nu' must be >= 0");
  const double gamma = positive(cfg, "mode.gamma", 1.0);
  const double alpha = positive(cfg, "mode.alpha", 0.5);
  const auto d = static_cast<int>(cfg.get_int("mode.dimension", 1));
  if (d < 1 || d > 3) config_fail("mode.dimension must be 1, 2 or 3");
  const double temperature = positive(cfg, "mode.temperature", 1.0);
  const double t_min = positive(cfg, "time.min", 0.5);
  const double t_max = positive(cfg, "time.max", 50.0);
  const Eigen::Index points = checked_sites(cfg, "time.points", 40, 2);
  if (!(t_max > t_min)) config_fail("time.max must exceed time.min");

  std::vector<double> times(points);
  for (Eigen::Index i = 0; i < points; ++i)
    times[i] = t_min * std::pow(t_max / t_min,
                                static_cast<double>(i) /
                                    static_cast<double>(points - 1));

  const GreenKuboResult gk =
      gk_correlation(nu, gamma, alpha, d, times, temperature);
  std::vector<double> ring;
  if (cfg.has("chain.n")) {
    const Eigen::Index n = checked_sites(cfg, "chain.n", 128, 3);
    ring = gk_correlation_ring(n, nu, gamma, alpha, times, temperature);
  }

  std::vector<std::string> header = {"time", "value"};
  if (!ring.empty()) header.push_back("ring_value");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < gk.time.size(); ++i) {
    std::vector<std::string> row = {csv_cell(gk.time[i]),
                                    csv_cell(gk.value[i])};
    if (!ring.empty()) row.push_back(csv_cell(ring[i]));
    rows.push_back(std::move(row));
  }
  write_csv(out / "correlation.csv", header, rows);
  return {{"tail_exponent", gk.tail_exponent},
          {"outputs", {"correlation.csv"}}};
}

json run_exact_ness(const Config& cfg, const fs::path& out,
                    std::uint64_t /*seed*/, int /*replicas*/) {
  cfg.require_known(with_common(
      {"chain.n", "potential.alpha", "noise.gamma", "bath.coupling_left",
       "bath.coupling_right", "bath.t_left", "bath.t_right", "bath.tau_left",
       "bath.tau_right"}));
  MomentParams prm;
  prm.n = checked_sites(cfg, "chain.n", 64, 3);
  prm.alpha = positive(cfg, "potential.alpha", 0.5);
  prm.gamma = positive(cfg, "noise.gamma", 1.0);
  prm.gamma_left = positive(cfg, "bath.coupling_left", 1.0);
  prm.gamma_right = positive(cfg, "bath.coupling_right", 1.0);
  prm.t_left = positive(cfg, "bath.t_left", 1.0);
  prm.t_right = positive(cfg, "bath.t_right", 1.0);
  prm.tau_left = cfg.get_double("bath.tau_left", 0.0);
  prm.tau_right = cfg.get_double("bath.tau_right", 0.0);

  const MomentSystem sys{prm};
  const NessSolution sol = solve_ness(sys);

  std::vector<std::vector<std::string>> momenta;
  for (Eigen::Index i = 0; i < prm.n; ++i)
    momenta.push_back({csv_cell(static_cast<std::int64_t>(i)),
                       csv_cell(sol.mean[prm.n - 1 + i])});
  write_csv(out / "momenta.csv", {"site", "mean_momentum"}, momenta);

  std::vector<std::vector<std::string>> tension;
  for (Eigen::Index b = 0; b < sol.tension.size(); ++b)
    tension.push_back({csv_cell(static_cast<std::int64_t>(b)),
                       csv_cell(sol.tension[b])});
  write_csv(out / "tension.csv", {"bond", "tension"}, tension);

  // Closed form for the common drift of the momenta; the solver value
  // must agree to round-off, which doubles as a self-check.
  const double denom = prm.gamma * static_cast<double>(prm.n - 2) +
                       prm.gamma_left + prm.gamma_right;
  const double predicted = (prm.tau_right - prm.tau_left) / denom;
  return {{"p_s", sol.p_s},
          {"p_s_closed_form", predicted},
          {"p_s_residual", std::abs(sol.p_s - predicted)},
          {"p_s_check", std::abs(sol.p_s - predicted) <= 1e-12 ? "pass"
                                                               : "fail"},
          {"j_s", sol.j_s},
          {"j_left", sol.j_left},
          {"j_right", sol.j_right},
          {"boundary_temp_left", sol.p_sq_left},
          {"boundary_temp_right", sol.p_sq_right},
          {"outputs", {"momenta.csv", "tension.csv"}}};
}

json run_fd_check(const Config& cfg, const fs::path& out, std::uint64_t seed,
                  int /*replicas*/) {
  cfg.require_known(with_common({"check.gamma_list", "check.states"}));
  std::vector<double> gammas = {0.1, 1.0, 10.0};
  if (cfg.has("check.gamma_list")) gammas = cfg.get_double_list("check.gamma_list");
  const Eigen::Index states = checked_sites(cfg, "check.states", 10000, 1);
  for (double g : gammas)
    if (!(g > 0.0)) config_fail("check.gamma_list entries must be > 0");

  double worst = 0.0;
  std::vector<std::vector<std::string>> rows;
  for (double g : gammas) {
    const double residual =
        check_fluctuation_dissipation(g, static_cast<int>(states), seed);
    worst = std::max(worst, residual);
    rows.push_back({csv_cell(g), csv_cell(residual)});
  }
  write_csv(out / "residuals.csv", {"gamma", "max_residual"}, rows);
  return {{"max_residual", worst},
          {"states", states},
          {"identity_check", worst <= 1e-12 ? "pass" : "fail"},
          {"outputs", {"residuals.csv"}}};
}

json run_energy_corr(const Config& cfg, const fs::path& out,
                     std::uint64_t seed, int replicas) {
  cfg.require_known(with_common(
      {"chain.n", "noise.gamma", "time.t", "lattice.factor"}));
  const Eigen::Index n = checked_sites(cfg, "chain.n", 64, 4);
  if ((n & (n - 1)) != 0)
    config_fail("chain.n must be a power of two for the spectral sampler");
  const double gamma = positive(cfg, "noise.gamma", 1.0);
  const double t = positive(cfg, "time.t", std::pow(static_cast<double>(n), 1.5));
  const Eigen::Index factor = checked_sites(cfg, "lattice.factor", 16, 1);
  if (replicas < 2) config_fail("run.replicas must be >= 2 for error bars");

  const EnergyCorrelationTable tab =
      energy_correlation_eta(n, gamma, t, replicas, seed, factor);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < tab.x.size(); ++i)
    rows.push_back({csv_cell(static_cast<std::int64_t>(tab.x[i])),
                    csv_cell(tab.value[static_cast<Eigen::Index>(i)]),
                    csv_cell(tab.std_error[static_cast<Eigen::Index>(i)])});
  write_csv(out / "correlation.csv", {"x", "value", "std_error"}, rows);

  const double mass = tab.value.sum();
  return {{"sites", n},
          {"time", t},
          {"mass", mass},
          {"mass_check", std::abs(mass - 1.0) <= 1e-8 ? "pass" : "fail"},
          {"outputs", {"correlation.csv"}}};
}

// Shared CSV emitter for the two field solvers: one q column plus one
// column per component and snapshot.
void write_frames(const fs::path& path, const PdeTrajectory& tr,
                  const std::vector<std::string>& names) {
  const Eigen::Index m = tr.frames.front().cells();
  std::vector<std::string> header = {"q"};
  for (std::size_t f = 0; f < tr.frames.size(); ++f)
    for (const std::string& name : names)
      header.push_back(name + "_" + std::to_string(f));
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<std::string> row = {
        csv_cell(static_cast<double>(i) / static_cast<double>(m))};
    for (const Grid1D& g : tr.frames)
      for (Eigen::Index c = 0; c < g.components(); ++c)
        row.push_back(csv_cell(g.values(i, c)));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

Grid1D grid_from(const Config& cfg, const std::string& first,
                 const std::string& second) {
  const Eigen::Index m = checked_sites(cfg, "grid.cells", 256, 8);
  Grid1D g;
  g.domain = Domain::kTorus;
  g.values.resize(m, 2);
  auto fill = [&](Eigen::Index col, const std::string& prefix) {
    const double mean = cfg.get_double("init." + prefix + "_mean",
                                       col == 0 ? 0.0 : 1.0);
    const double amp = cfg.get_double("init." + prefix + "_amp", 0.0);
    const double mode = cfg.get_double("init." + prefix + "_mode", 1.0);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double q = static_cast<double>(i) / static_cast<double>(m);
      g.values(i, col) = mean + amp * std::sin(2.0 * M_PI * mode * q);
    }
  };
  fill(0, first);
  fill(1, second);
  return g;
}

json frames_summary(const PdeTrajectory& tr) {
  json times = json::array();
  for (double t : tr.time) times.push_back(t);
  return {{"frame_times", times},
          {"final_time", tr.time.back()},
          {"shock_detected", tr.shock_detected},
          {"outputs", {"frames.csv"}}};
}

json run_pde_euler(const Config& cfg, const fs::path& out,
                   std::uint64_t /*seed*/, int /*replicas*/) {
  std::set<std::string> keys = kPotentialKeys;
  keys.insert({"grid.cells", "init.e_mean", "init.e_amp", "init.e_mode",
               "init.v_mean", "init.v_amp", "init.v_mode", "sim.horizon",
               "sim.cfl", "sim.snapshots", "closure.kind", "closure.e_lo",
               "closure.e_hi", "closure.v_lo", "closure.v_hi",
               "closure.nodes"});
  cfg.require_known(with_common(keys));
  Grid1D init = grid_from(cfg, "e", "v");
  const double horizon = positive(cfg, "sim.horizon", 0.1);
  const double cfl = cfg.get_double("sim.cfl", 0.45);
  const auto snapshots = checked_sites(cfg, "sim.snapshots", 5, 2);

  PdeTrajectory tr;
  const std::string closure = cfg.get_string("closure.kind", "exponential");
  if (closure == "exponential") {
    tr = solve_euler(init, exponential_tension, horizon, cfl,
                     static_cast<int>(snapshots));
  } else if (closure == "table") {
    const TensionTable table(
        potential_from(cfg), cfg.get_double("closure.e_lo", 0.5),
        cfg.get_double("closure.e_hi", 2.0), cfg.get_double("closure.v_lo", -1.0),
        cfg.get_double("closure.v_hi", 1.0),
        checked_sites(cfg, "closure.nodes", 48, 4),
        checked_sites(cfg, "closure.nodes", 48, 4));
    tr = solve_euler(
        init, [&table](double e, double v) { return table(e, v); }, horizon,
        cfl, static_cast<int>(snapshots));
  } else {
    config_fail("closure.kind '" + closure +
                "' is not one of exponential, table");
  }
  write_frames(out / "frames.csv", tr, {"e", "v"});
  return frames_summary(tr);
}

json run_pde_diffusive(const Config& cfg, const fs::path& out,
                       std::uint64_t /*seed*/, int /*replicas*/) {
  cfg.require_known(with_common(
      {"grid.cells", "init.r_mean", "init.r_amp", "init.r_mode",
       "init.e_mean", "init.e_amp", "init.e_mode", "noise.gamma",
       "sim.horizon", "sim.dt", "sim.snapshots"}));
  Grid1D init = grid_from(cfg, "r", "e");
  const double gamma = positive(cfg, "noise.gamma", 1.0);
  const double horizon = positive(cfg, "sim.horizon", 0.1);
  const double dt = cfg.get_double("sim.dt", 0.0);
  const auto snapshots = checked_sites(cfg, "sim.snapshots", 5, 2);
  const PdeTrajectory tr =
      solve_diffusive(init, gamma, horizon, static_cast<int>(snapshots), dt);
  write_frames(out / "frames.csv", tr, {"r", "e"});
  return frames_summary(tr);
}

json run_kernel(const Config& cfg, const fs::path& out,
                std::uint64_t /*seed*/, int /*replicas*/) {
  cfg.require_known(
      with_common({"kernel.t", "grid.halfwidth", "grid.points"}));
  const double t = positive(cfg, "kernel.t", 1.0);
  const double halfwidth = positive(cfg, "grid.halfwidth", 6000.0);
  const Eigen::Index points = checked_sites(cfg, "grid.points", 1 << 16, 8);

  Eigen::VectorXd x(points);
  const double dx = 2.0 * halfwidth / static_cast<double>(points);
  for (Eigen::Index i = 0; i < points; ++i)
    x[i] = -halfwidth + dx * static_cast<double>(i);
  const KernelTable tab = skew_fractional_kernel(t, x);

  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < points; ++i)
    rows.push_back({csv_cell(tab.x[i]), csv_cell(tab.p[i])});
  write_csv(out / "kernel.csv", {"x", "density"}, rows);

  const double mass = tab.p.sum() * dx;
  return {{"time", t},
          {"discrete_mass", mass},
          {"mass_check", std::abs(mass - 1.0) <= 1e-8 ? "pass" : "fail"},
          {"truncated_mass", tab.truncated_mass},
          {"imag_residue", tab.imag_residue},
          {"outputs", {"kernel.csv"}}};
}

json run_quasipotential(const Config& cfg, const fs::path& out,
                        std::uint64_t /*seed*/, int /*replicas*/) {
  cfg.require_known(with_common(
      {"bath.t_left", "bath.t_right", "profile.e_list", "profile.cells",
       "profile.e_mean", "profile.e_amp", "profile.e_mode"}));
  QuasiPotentialProblem prob;
  prob.t_left = positive(cfg, "bath.t_left", 1.0);
  prob.t_right = positive(cfg, "bath.t_right", 1.0);
  if (cfg.has("profile.e_list")) {
    const std::vector<double> e = cfg.get_double_list("profile.e_list");
    prob.e = Eigen::Map<const Eigen::VectorXd>(
        e.data(), static_cast<Eigen::Index>(e.size()));
  } else {
    const Eigen::Index m = checked_sites(cfg, "profile.cells", 64, 8);
    const double mean = cfg.get_double("profile.e_mean", 1.0);
    const double amp = cfg.get_double("profile.e_amp", 0.0);
    const double mode = cfg.get_double("profile.e_mode", 1.0);
    prob.e.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double q =
          (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      prob.e[i] = mean + amp * std::sin(2.0 * M_PI * mode * q);
    }
  }
  if (prob.e.size() < 8 || !prob.e.allFinite() || prob.e.minCoeff() <= 0.0)
    config_fail("profile energies must be positive (at least 8 cells)");

  const QuasiPotentialResult r = quasi_potential(prob);
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < r.q.size(); ++i)
    rows.push_back({csv_cell(r.q[i]), csv_cell(r.f[i])});
  write_csv(out / "profile.csv", {"q", "temperature"}, rows);
  return {{"value", r.value},
          {"cells", prob.e.size()},
          {"outputs", {"profile.csv"}}};
}

// ---------------------------------------------------------------------
// Dispatch, summary record, and the sweep driver.
// ---------------------------------------------------------------------

using RunFn = json (*)(const Config&, const fs::path&, std::uint64_t, int);

const std::map<std::string, RunFn>& registry() {
  static const std::map<std::string, RunFn> reg = {
      {"gibbs-sample", run_gibbs_sample},
      {"simulate", run_simulate},
      {"ness-scan", run_ness_scan},
      {"green-kubo", run_green_kubo},
      {"exact-ness", run_exact_ness},
      {"fd-check", run_fd_check},
      {"energy-corr", run_energy_corr},
      {"pde-euler", run_pde_euler},
      {"pde-diffusive", run_pde_diffusive},
      {"kernel", run_kernel},
      {"quasipotential", run_quasipotential},
  };
  return reg;
}

json execute(const std::string& kind, const Config& cfg, const fs::path& out,
             std::uint64_t seed, int replicas) {
  if (cfg.has("experiment") && cfg.get_string("experiment") != kind)
    config_fail("config experiment '" + cfg.get_string("experiment") +
                "' does not match the '" + kind + "' subcommand");
  if (replicas < 1) config_fail("run.replicas must be >= 1");
  fs::create_directories(out);
  const auto start = std::chrono::steady_clock::now();
  json summary = registry().at(kind)(cfg, out, seed, replicas);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  summary["experiment"] = kind;
  summary["seed"] = seed;
  summary["replicas"] = replicas;
  summary["rng"] = Philox::kIdentifier;
  summary["wall_time_s"] = wall;
  std::ofstream record(out / "summary.json", std::ios::trunc);
  record << summary.dump() << "\n";
  return summary;
}

// Child seeds come from a documented counter scheme: point i uses
// splitmix64(master xor golden * (i + 1)), which is injective in i for a
// fixed master because the golden multiplier is odd and the splitmix
// finalizer is a bijection.
std::uint64_t child_seed(std::uint64_t master, std::size_t index) {
  std::uint64_t z = master ^ (0x9E3779B97F4A7C15ULL *
                              static_cast<std::uint64_t>(index + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

json run_sweep(const Config& tmpl, const fs::path& out, std::uint64_t seed,
               int replicas, bool replicas_given, int threads) {
  const std::string kind = tmpl.get_string("experiment");
  if (registry().count(kind) == 0)
    config_fail("sweep template experiment '" + kind +
                "' is not a known experiment kind");

  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& [key, value] : tmpl.entries()) {
    if (key.rfind("sweep.", 0) != 0) continue;
    const std::string target = key.substr(6);
    if (target.empty()) config_fail("sweep axis key must name a config field");
    const std::vector<std::string> values = tmpl.get_string_list(key);
    if (values.empty())
      config_fail("sweep axis '" + target + "' must list at least one value");
    axes.emplace_back(target, values);
  }
  if (axes.empty())
    config_fail("sweep needs at least one 'sweep.<field> = v1,v2' axis");

  std::size_t total = 1;
  for (const auto& [key, values] : axes) total *= values.size();

  struct Point {
    Config cfg;
    std::string id;
    std::uint64_t seed = 0;
    json assignment;
    json detail;
    std::string error;
  };
  std::vector<Point> points(total);
  for (std::size_t i = 0; i < total; ++i) {
    Point& pt = points[i];
    pt.cfg = tmpl;
    for (const auto& [key, values] : axes) pt.cfg.erase("sweep." + key);
    std::size_t rest = i;
    for (const auto& [key, values] : axes) {
      const std::string& v = values[rest % values.size()];
      rest /= values.size();
      pt.cfg.set(key, v);
      pt.assignment[key] = v;
    }
    pt.seed = child_seed(seed, i);
    pt.cfg.set("run.seed", std::to_string(pt.seed));
    char id[64];
    std::snprintf(id, sizeof(id), "run-%05zu-%016llx", i,
                  static_cast<unsigned long long>(pt.seed));
    pt.id = id;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      Point& pt = points[i];
      try {
        const int reps = replicas_given
                             ? replicas
                             : static_cast<int>(pt.cfg.get_int(
                                   "run.replicas", replicas));
        pt.detail = execute(kind, pt.cfg, out / pt.id, pt.seed, reps);
      } catch (const std::exception& err) {
        pt.error = err.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), total);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  // Merge: provenance columns first, then the union of scalar summary
  // fields across points.
  std::set<std::string> scalar_fields;
  for (const Point& pt : points)
    for (const auto& [key, value] : pt.detail.items())
      if (value.is_number()) scalar_fields.insert(key);
  scalar_fields.erase("seed");
  scalar_fields.erase("wall_time_s");

  std::vector<std::string> header = {"point", "run_id", "seed", "status"};
  for (const auto& [key, values] : axes) header.push_back(key);
  header.insert(header.end(), scalar_fields.begin(), scalar_fields.end());
  std::vector<std::vector<std::string>> rows;
  json failed = json::array();
  for (std::size_t i = 0; i < total; ++i) {
    const Point& pt = points[i];
    std::vector<std::string> row = {
        csv_cell(static_cast<std::int64_t>(i)), pt.id,
        std::to_string(pt.seed), pt.error.empty() ? "ok" : "failed"};
    for (const auto& [key, values] : axes)
      row.push_back(pt.assignment[key].get<std::string>());
    for (const std::string& field : scalar_fields) {
      if (pt.detail.contains(field))
        row.push_back(csv_cell(pt.detail[field].get<double>()));
      else
        row.push_back("");
    }
    rows.push_back(std::move(row));
    if (!pt.error.empty()) failed.push_back({{"run_id", pt.id},
                                             {"error", pt.error}});
  }
  write_csv(out / "merged.csv", header, rows);

  json summary = {{"kind", kind},
                  {"points", static_cast<std::int64_t>(total)},
                  {"failed", failed},
                  {"seed_scheme",
                   "splitmix64(master_seed xor 0x9e3779b97f4a7c15*(index+1))"},
                  {"outputs", {"merged.csv"}}};
  if (!failed.empty()) {
    std::string ids;
    for (const auto& item : failed)
      ids += " " + item["run_id"].get<std::string>();
    throw std::runtime_error(
        "sweep: " + std::to_string(failed.size()) + " of " +
        std::to_string(total) + " points failed (PartialFailure):" + ids);
  }
  return summary;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chainflux: energy transport in one-dimensional oscillator chains "
      "with conservative noise"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int replicas = 0;
  int threads = 0;

  const std::map<std::string, std::string> descriptions = {
      {"gibbs-sample", "draw equilibrium stretch samples and compare moments"},
      {"simulate", "integrate a chain and record conserved totals"},
      {"ness-scan", "steady-state currents over a list of chain sizes"},
      {"green-kubo", "exact current autocorrelation of the harmonic ring"},
      {"exact-ness", "stationary moments of the boundary-driven flip chain"},
      {"fd-check", "fluctuation-dissipation residual on random states"},
      {"energy-corr", "rescaled energy correlation of the volume chain"},
      {"pde-euler", "hyperbolic two-field limit with shock detection"},
      {"pde-diffusive", "diffusive stretch-energy system on the torus"},
      {"kernel", "skewed stable kernel tables"},
      {"quasipotential", "nonequilibrium free energy of a profile"},
      {"sweep", "expand sweep.* axes of a template into child runs"},
  };
  for (const auto& [name, blurb] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, blurb);
    sub->add_option("--config", config_path, "key = value run configuration")
        ->required();
    sub->add_option("--out", out_dir, "artifact directory");
    sub->add_option("--seed", seed, "master RNG seed");
    sub->add_option("--replicas", replicas, "independent replicas");
    sub->add_option("--threads", threads, "sweep worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string kind = sub->get_name();
  try {
    const Config cfg = Config::load(config_path);
    const std::uint64_t run_seed =
        sub->count("--seed") ? seed : cfg.get_u64("run.seed", 1);
    const bool replicas_given = sub->count("--replicas") > 0;
    const int run_replicas =
        replicas_given ? replicas
                       : static_cast<int>(cfg.get_int("run.replicas", 4));
    const int run_threads =
        sub->count("--threads")
            ? threads
            : static_cast<int>(cfg.get_int("run.threads", 1));
    const fs::path out = out_dir.empty() ? fs::path("runs") / kind
                                         : fs::path(out_dir);

    json summary;
    if (kind == "sweep") {
      fs::create_directories(out);
      const auto start = std::chrono::steady_clock::now();
      summary = run_sweep(cfg, out, run_seed, run_replicas, replicas_given,
                          run_threads);
      summary["experiment"] = "sweep";
      summary["seed"] = run_seed;
      summary["rng"] = Philox::kIdentifier;
      summary["wall_time_s"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      std::ofstream record(out / "summary.json", std::ios::trunc);
      record << summary.dump() << "\n";
    } else {
      summary = execute(kind, cfg, out, run_seed, run_replicas);
    }
    std::cout << summary.dump() << std::endl;
  } catch (const std::exception& err) {
    std::cerr << "chainflux " << kind << ": " << err.what() << std::endl;
    const bool config_error =
        std::string(err.what()).find("(ConfigInvalid)") != std::string::npos;
    return config_error ? 2 : 3;
  }
  return 0;
}
