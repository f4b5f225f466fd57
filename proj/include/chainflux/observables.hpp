// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <chainflux/dynamics.hpp>
#include <chainflux/gibbs.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainflux {

/* Correlation estimate on a uniform lag grid. `std_error[k]` is a
 * batch-mean (single series) or replica-dispersion (merged) error bar.
 */
struct CorrelationTable {
  Eigen::VectorXd lag;
  Eigen::VectorXd estimate;
  Eigen::VectorXd std_error;
  int replicas = 1;
  std::string id;
};

namespace internal {

// Biased autocovariance (1/n normalization, mean removed) for lags
// 0..max_lag via zero-padded FFT.
inline Eigen::VectorXd acf_fft(const Eigen::VectorXd& x,
                               Eigen::Index max_lag) {
  const Eigen::Index n = x.size();
  Eigen::Index m = 1;
  while (m < n + max_lag + 1) m <<= 1;
  std::vector<double> padded(static_cast<std::size_t>(m), 0.0);
  const double mean = x.mean();
  for (Eigen::Index i = 0; i < n; ++i)
    padded[static_cast<std::size_t>(i)] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& z : freq) z = std::norm(z);
  std::vector<double> circ;
  fft.inv(circ, freq);
  Eigen::VectorXd out(max_lag + 1);
  for (Eigen::Index k = 0; k <= max_lag; ++k)
    out[k] = circ[static_cast<std::size_t>(k)] / static_cast<double>(n);
  return out;
}

}  // namespace internal

/* Autocovariance of a scalar series for lags 0..max_lag. Error bars come
 * from the dispersion of estimates over contiguous batches; the series
 * must be at least 8x max_lag long so at least two batches of 4x max_lag
 * are available.
 */
inline CorrelationTable autocorrelation(const Eigen::VectorXd& series,
                                        Eigen::Index max_lag, double dt = 1.0,
                                        std::string id = {}) {
  const Eigen::Index n = series.size();
  if (max_lag < 1)
    throw std::runtime_error("autocorrelation(): max_lag must be >= 1");
  if (!(dt > 0.0))
    throw std::runtime_error("autocorrelation(): dt must be positive");
  if (n < 8 * max_lag)
    throw std::runtime_error(
        "autocorrelation(): series too short: need at least 8*max_lag "
        "samples, got " +
        std::to_string(n) + " for max_lag " + std::to_string(max_lag));

  CorrelationTable table;
  table.id = std::move(id);
  table.lag = dt * Eigen::VectorXd::LinSpaced(max_lag + 1, 0.0,
                                              static_cast<double>(max_lag));
  table.estimate = internal::acf_fft(series, max_lag);

  const Eigen::Index batches =
      std::min<Eigen::Index>(16, n / (4 * max_lag));
  const Eigen::Index len = n / batches;
  Eigen::MatrixXd per_batch(max_lag + 1, batches);
  for (Eigen::Index b = 0; b < batches; ++b)
    per_batch.col(b) = internal::acf_fft(series.segment(b * len, len), max_lag);
  const Eigen::VectorXd bmean = per_batch.rowwise().mean();
  table.std_error =
      ((per_batch.colwise() - bmean).rowwise().squaredNorm() /
       static_cast<double>(batches - 1) / static_cast<double>(batches))
          .cwiseSqrt();
  return table;
}

/* Order-independent replica merger: tracks per-lag running mean and
 * scatter (Welford), so partial merges combine exactly.
 */
class CorrelationAccumulator {
 public:
  void add(const CorrelationTable& t) {
    if (count_ == 0) {
      lag_ = t.lag;
      mean_ = t.estimate;
      m2_ = Eigen::VectorXd::Zero(t.estimate.size());
      id_ = t.id;
      count_ = t.replicas;
      return;
    }
    if (t.lag.size() != lag_.size() || (t.lag - lag_).norm() > 0)
      throw std::runtime_error(
          "CorrelationAccumulator::add(): lag grids differ");
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(t.replicas);
    const Eigen::VectorXd delta = t.estimate - mean_;
    mean_ += (nb / (na + nb)) * delta;
    m2_ += delta.cwiseAbs2() * (na * nb / (na + nb));
    count_ += t.replicas;
  }

  void add(const CorrelationAccumulator& other) {
    if (other.count_ == 0) return;
    CorrelationTable t;
    t.lag = other.lag_;
    t.estimate = other.mean_;
    t.replicas = other.count_;
    if (count_ == 0) {
      *this = other;
      return;
    }
    if (t.lag.size() != lag_.size() || (t.lag - lag_).norm() > 0)
      throw std::runtime_error(
          "CorrelationAccumulator::add(): lag grids differ");
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const Eigen::VectorXd delta = other.mean_ - mean_;
    mean_ += (nb / (na + nb)) * delta;
    m2_ += other.m2_ + delta.cwiseAbs2() * (na * nb / (na + nb));
    count_ += other.count_;
  }

  int count() const { return count_; }

  CorrelationTable result() const {
    if (count_ == 0)
      throw std::runtime_error(
          "CorrelationAccumulator::result(): no replicas added");
    CorrelationTable t;
    t.lag = lag_;
    t.estimate = mean_;
    t.replicas = count_;
    t.id = id_;
    if (count_ > 1)
      t.std_error = (m2_ / static_cast<double>(count_ - 1) /
                     static_cast<double>(count_))
                        .cwiseSqrt();
    else
      t.std_error = Eigen::VectorXd::Zero(lag_.size());
    return t;
  }

 private:
  Eigen::VectorXd lag_, mean_, m2_;
  int count_ = 0;
  std::string id_;
};

/* Laplace transform of a correlation table by trapezoid over its lag
 * grid. `tail_fraction` bounds the truncated tail assuming |C| stays
 * below its last tabulated magnitude; values above 20% abort.
 */
struct LaplaceTable {
  Eigen::VectorXd z;
  Eigen::VectorXd value;
  Eigen::VectorXd tail_fraction;
};

inline LaplaceTable laplace_correlation(const CorrelationTable& c,
                                        const Eigen::VectorXd& zs) {
  const Eigen::Index m = c.lag.size();
  if (m < 2)
    throw std::runtime_error(
        "laplace_correlation(): need at least two lag points");
  const double dt = c.lag[1] - c.lag[0];
  for (Eigen::Index k = 1; k < m; ++k)
    if (std::abs(c.lag[k] - c.lag[k - 1] - dt) > 1e-9 * dt)
      throw std::runtime_error(
          "laplace_correlation(): lag grid must be uniform");
  LaplaceTable out;
  out.z = zs;
  out.value.resize(zs.size());
  out.tail_fraction.resize(zs.size());
  const double horizon = c.lag[m - 1];
  const double last = std::abs(c.estimate[m - 1]);
  for (Eigen::Index i = 0; i < zs.size(); ++i) {
    const double z = zs[i];
    if (!(z > 0.0))
      throw std::runtime_error("laplace_correlation(): z must be positive");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double w = (k == 0 || k == m - 1) ? 0.5 : 1.0;
      acc += w * std::exp(-z * c.lag[k]) * c.estimate[k];
    }
    out.value[i] = acc * dt;
    const double tail = last * std::exp(-z * horizon) / z;
    out.tail_fraction[i] =
        tail / std::max(std::abs(out.value[i]), 1e-300);
    if (out.tail_fraction[i] > 0.2)
      throw std::runtime_error(
          "laplace_correlation(): tail-dominant at z=" + std::to_string(z) +
          ": truncated tail bound exceeds 20% of the estimate");
  }
  return out;
}

/* Block averages of the conserved fields on a macroscopic grid with
 * `blocks` cells. The volume-like field is the stretch (bond to the left
 * of each site; a boundary site without one reuses its nearest bond) or
 * eta; the energy field is the per-site energy, or V(eta) for volume
 * chains.
 */
struct EmpiricalField {
  Eigen::VectorXd volume;
  Eigen::VectorXd energy;
};

inline EmpiricalField empirical_field(const ChainState& s,
                                      const PotentialSpec& pot,
                                      Eigen::Index blocks) {
  const Eigen::Index n = s.sites();
  if (blocks < 1 || n % blocks != 0)
    throw std::runtime_error(
        "empirical_field(): block count must divide the chain size");
  Eigen::VectorXd vol(n);
  switch (s.family) {
    case ChainFamily::kEtaChain:
      vol = s.eta;
      break;
    case ChainFamily::kRPChain:
      for (Eigen::Index x = 0; x < n; ++x)
        vol[x] = x > 0 ? s.r[x - 1]
                       : (s.topology == Topology::kPeriodic ? s.r[n - 1]
                                                            : s.r[0]);
      break;
    case ChainFamily::kQPChain:
      for (Eigen::Index x = 0; x < n; ++x) {
        if (x > 0)
          vol[x] = s.q[x] - s.q[x - 1];
        else if (s.topology == Topology::kPeriodic)
          vol[x] = s.q[0] - s.q[n - 1];
        else if (s.topology == Topology::kFixed)
          vol[x] = s.q[0];
        else
          vol[x] = s.q[1] - s.q[0];
      }
      break;
  }
  const Eigen::VectorXd en = site_energies(s, pot);
  const Eigen::Index len = n / blocks;
  EmpiricalField field;
  field.volume.resize(blocks);
  field.energy.resize(blocks);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    field.volume[b] = vol.segment(b * len, len).mean();
    field.energy[b] = en.segment(b * len, len).mean();
  }
  return field;
}

/* Two-reservoir steady-state protocol. A scan runs each requested size
 * with boundary baths at t_left/t_right (plus boundary tensions for
 * forced stretch chains), discards a diffusively scaled burn-in, and
 * averages the spatially averaged ledger current.
 */
struct NessConfig {
  ChainFamily family = ChainFamily::kEtaChain;
  Topology topology = Topology::kFixed;
  PotentialSpec potential = harmonic(0.5);
  NoiseKind noise = NoiseKind::kVolumeExchange;
  double gamma = 1.0;
  BathKind bath = BathKind::kOverdampedEta;
  double t_left = 1.1;
  double t_right = 0.9;
  double coupling = 1.0;
  double tau_left = 0.0;
  double tau_right = 0.0;
  double dt = 0.01;
  double t_measure = 2e4;
  int replicas = 2;
  std::uint64_t seed = 1;
};

struct NessPoint {
  Eigen::Index n = 0;
  double current = 0.0;
  double std_error = 0.0;
};

namespace internal {

inline double ness_burn_in(const NessConfig& cfg, Eigen::Index n) {
  const double dn = static_cast<double>(n);
  if (cfg.gamma <= 0.0) return std::max(1e4, 100.0 * dn);
  return std::max(1e4, 10.0 * dn * dn / cfg.gamma);
}

inline DynamicsSpec ness_spec(const NessConfig& cfg, Eigen::Index n) {
  DynamicsSpec spec;
  spec.potential = cfg.potential;
  spec.noise = cfg.noise;
  spec.gamma = cfg.gamma;
  spec.dt = cfg.dt;
  spec.tau_left = cfg.tau_left;
  spec.tau_right = cfg.tau_right;
  spec.baths.push_back({0, cfg.bath, cfg.t_left, cfg.coupling});
  spec.baths.push_back({n - 1, cfg.bath, cfg.t_right, cfg.coupling});
  return spec;
}

// Local-equilibrium start: per-site Gibbs draws at the linearly
// interpolated reservoir temperature, zero tension. Cuts the distance
// the profile has to relax compared to a cold start.
inline ChainState ness_state(const NessConfig& cfg, Eigen::Index n,
                             std::uint64_t stream) {
  Philox rng(cfg.seed, stream);
  auto temp_at = [&](Eigen::Index x) {
    const double f =
        n > 1 ? static_cast<double>(x) / static_cast<double>(n - 1) : 0.5;
    return cfg.t_left + (cfg.t_right - cfg.t_left) * f;
  };
  switch (cfg.family) {
    case ChainFamily::kEtaChain: {
      ChainState s = make_eta_chain(n, cfg.topology);
      for (Eigen::Index x = 0; x < n; ++x)
        s.eta[x] =
            GibbsSampler(cfg.potential, 1.0 / temp_at(x), 0.0).sample(1, rng)[0];
      return s;
    }
    case ChainFamily::kRPChain: {
      ChainState s = make_rp_chain(n, cfg.topology);
      for (Eigen::Index x = 0; x < n; ++x)
        s.p[x] = std::sqrt(temp_at(x)) * rng.normal();
      for (Eigen::Index b = 0; b < s.r.size(); ++b)
        s.r[b] =
            GibbsSampler(cfg.potential, 1.0 / temp_at(b), 0.0).sample(1, rng)[0];
      return s;
    }
    case ChainFamily::kQPChain: {
      ChainState s = make_qp_chain(n, cfg.topology);
      for (Eigen::Index x = 0; x < n; ++x)
        s.p[x] = std::sqrt(temp_at(x)) * rng.normal();
      return s;
    }
  }
  throw std::runtime_error("ness_state(): unknown family");
}

}  // namespace internal

/* Steady-state current for one chain size. Runs `replicas` independent
 * trajectories, checks that early and late halves of the measurement
 * window agree within two standard errors (retrying once with a doubled
 * burn-in), and reports the replica-averaged current with a
 * replica-dispersion error bar.
 */
inline NessPoint ness_current(const NessConfig& cfg, Eigen::Index n) {
  if (cfg.replicas < 1 || cfg.replicas > 512)
    throw std::runtime_error("ness_current(): replicas must be in [1, 512]");
  if (!(cfg.t_measure > 0.0))
    throw std::runtime_error("ness_current(): t_measure must be positive");
  const DynamicsSpec spec = internal::ness_spec(cfg, n);
  constexpr int kBatches = 16;
  const double batch_t = cfg.t_measure / kBatches;

  for (int attempt = 0; attempt < 2; ++attempt) {
    const double burn = internal::ness_burn_in(cfg, n) * (attempt + 1);
    std::vector<double> rep_mean, rep_first, rep_second;
    Eigen::MatrixXd batch(kBatches, cfg.replicas);
    for (int j = 0; j < cfg.replicas; ++j) {
      const std::uint64_t stream =
          static_cast<std::uint64_t>(attempt) * 1024 + j;
      ChainState init = internal::ness_state(cfg, n, 4096 + stream);
      Simulator sim(init, spec, cfg.seed, stream, /*with_ledger=*/true);
      sim.run(burn);
      sim.reset_ledger();
      double prev = 0.0;
      for (int b = 0; b < kBatches; ++b) {
        sim.run(batch_t);
        const double total = sim.ledger()->total_e().mean();
        batch(b, j) = (total - prev) / batch_t;
        prev = total;
      }
      rep_mean.push_back(batch.col(j).mean());
      rep_first.push_back(batch.col(j).head(kBatches / 2).mean());
      rep_second.push_back(batch.col(j).tail(kBatches / 2).mean());
    }

    auto mean_se = [](const std::vector<double>& v) {
      const double m =
          std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double sq = 0.0;
      for (double x : v) sq += (x - m) * (x - m);
      const double se =
          v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1) /
                                   static_cast<double>(v.size()))
                       : 0.0;
      return std::pair<double, double>{m, se};
    };
    auto [m1, s1] = mean_se(rep_first);
    auto [m2, s2] = mean_se(rep_second);
    double gate = std::sqrt(s1 * s1 + s2 * s2);
    if (cfg.replicas == 1) {
      // Single replica: fall back on batch dispersion for the halves.
      const auto half = kBatches / 2;
      const double v1 =
          (batch.col(0).head(half).array() - m1).square().sum() / (half - 1);
      const double v2 =
          (batch.col(0).tail(half).array() - m2).square().sum() / (half - 1);
      gate = std::sqrt((v1 + v2) / half);
    }
    if (std::abs(m1 - m2) <= 2.0 * gate) {
      auto [mean, se] = mean_se(rep_mean);
      if (cfg.replicas == 1) {
        const Eigen::ArrayXd b = batch.col(0).array();
        se = std::sqrt((b - mean).square().sum() / (kBatches - 1) / kBatches);
      }
      return {n, mean, se};
    }
  }
  throw std::runtime_error(
      "ness_current(): not stationary after extended burn-in at n=" +
      std::to_string(n));
}

inline std::vector<NessPoint> ness_scan(const NessConfig& cfg,
                                        const std::vector<Eigen::Index>& ns) {
  std::vector<NessPoint> table;
  table.reserve(ns.size());
  for (Eigen::Index n : ns) {
    NessConfig local = cfg;
    // Streams must stay distinct across sizes within one scan.
    local.seed = cfg.seed + static_cast<std::uint64_t>(table.size() + 1) * 65537;
    table.push_back(ness_current(local, n));
  }
  return table;
}

/* Conductivity exponent from kappa(N) = N J_N ~ N^delta. Weighted least
 * squares on the log-log table; if a quadratic term in log N is
 * significant at two sigma the fit falls back to the largest half of the
 * sizes. The error bar is the larger of the WLS slope error and the
 * dispersion over parametric bootstrap refits.
 */
struct ExponentFit {
  double delta = 0.0;
  double std_error = 0.0;
  bool curvature_flagged = false;
  Eigen::Index points_used = 0;
};

namespace internal {

struct WlsLine {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

inline WlsLine wls_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& sigma) {
  const Eigen::Index m = x.size();
  Eigen::MatrixXd a(m, 2);
  a.col(0).setOnes();
  a.col(1) = x;
  const Eigen::VectorXd w = sigma.cwiseAbs2().cwiseInverse();
  const Eigen::Matrix2d gram = a.transpose() * w.asDiagonal() * a;
  const Eigen::Vector2d rhs = a.transpose() * (w.cwiseProduct(y));
  const Eigen::Vector2d c = gram.ldlt().solve(rhs);
  const Eigen::Matrix2d cov = gram.inverse();
  return {c[1], std::sqrt(cov(1, 1)), c[0]};
}

}  // namespace internal

inline ExponentFit fit_exponent(const std::vector<NessPoint>& table,
                                std::uint64_t seed = 12345) {
  if (table.size() < 3)
    throw std::runtime_error("fit_exponent(): need at least three sizes");
  std::vector<NessPoint> rows = table;
  std::sort(rows.begin(), rows.end(),
            [](const NessPoint& a, const NessPoint& b) { return a.n < b.n; });
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd x(m), y(m), sigma(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = rows[i];
    if (!(r.current > 0.0))
      throw std::runtime_error(
          "fit_exponent(): currents must be positive to fit a power law");
    x[i] = std::log(static_cast<double>(r.n));
    y[i] = std::log(static_cast<double>(r.n) * r.current);
    sigma[i] = std::max(r.std_error / r.current, 1e-6);
  }

  ExponentFit fit;
  Eigen::Index lo = 0;
  if (m >= 4) {
    // Quadratic-in-log check for curvature.
    Eigen::MatrixXd a(m, 3);
    a.col(0).setOnes();
    a.col(1) = x;
    a.col(2) = x.cwiseAbs2();
    const Eigen::VectorXd w = sigma.cwiseAbs2().cwiseInverse();
    const Eigen::Matrix3d gram = a.transpose() * w.asDiagonal() * a;
    const Eigen::Vector3d rhs = a.transpose() * (w.cwiseProduct(y));
    const Eigen::Vector3d c = gram.ldlt().solve(rhs);
    const Eigen::Matrix3d cov = gram.inverse();
    if (std::abs(c[2]) > 2.0 * std::sqrt(cov(2, 2))) {
      fit.curvature_flagged = true;
      lo = m / 2;
      if (m - lo < 3) lo = m - 3;
    }
  }
  const Eigen::Index used = m - lo;
  const auto line = internal::wls_line(x.tail(used), y.tail(used),
                                       sigma.tail(used));
  fit.delta = line.slope;
  fit.points_used = used;

  Philox rng(seed);
  constexpr int kBoot = 400;
  double bm = 0.0, bsq = 0.0;
  for (int b = 0; b < kBoot; ++b) {
    Eigen::VectorXd yb = y.tail(used);
    for (Eigen::Index i = 0; i < used; ++i)
      yb[i] += sigma[lo + i] * rng.normal();
    const double d =
        internal::wls_line(x.tail(used), yb, sigma.tail(used)).slope;
    bm += d;
    bsq += d * d;
  }
  bm /= kBoot;
  const double boot_sd = std::sqrt(std::max(0.0, bsq / kBoot - bm * bm));
  fit.std_error = std::max(line.slope_se, boot_sd);
  return fit;
}

}  // namespace chainflux
