// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chainflux/chain_state.hpp"
#include "chainflux/quadrature.hpp"
#include "chainflux/rng.hpp"

namespace chainflux {

/* Exact solvers available when the potential is harmonic. The dynamics is
 * then linear with jump noise, so first and second moments obey closed
 * ODEs, stationary states are linear-algebra problems, and equilibrium
 * current correlations reduce to quadrature.
 */

/* ---------------------------------------------------------------------- */
/* Moment system for the open velocity-flip chain                          */
/* ---------------------------------------------------------------------- */

/* Open chain of n sites with V(r) = alpha r^2, stretch coordinates
 * r_0..r_{n-2} (bond b joins sites b and b+1), Langevin reservoirs at
 * temperature t_left / t_right acting on sites 0 and n-1, boundary
 * tensions tau_left / tau_right pulling on the end momenta, and velocity
 * flips at rate gamma/2 on every interior site.
 */
struct MomentParams {
  Eigen::Index n = 4;
  double alpha = 0.5;
  double gamma = 1.0;
  double gamma_left = 1.0;
  double gamma_right = 1.0;
  double t_left = 1.0;
  double t_right = 1.0;
  double tau_left = 0.0;
  double tau_right = 0.0;
};

/* Closed evolution of the phase-space moments.
 *
 * The state vector is z = (r_0..r_{n-2}, p_0..p_{n-1}). Between jumps z
 * follows dz = (A z + c)dt plus the reservoir diffusion; a flip at site x
 * maps p_x to -p_x. First moments damp at the full flip rate gamma while
 * p_x^2 is flip-invariant, which is the only place the jump character of
 * the noise survives in the moment equations:
 *
 *   dm/dt = A m + c
 *   dM/dt = A M + M A^T + c m^T + m c^T + D + 2 gamma diag_flip(M)
 *
 * with A carrying the flip damping on its diagonal and diag_flip(M) the
 * restriction of M to flip-site momentum diagonals (the correction that
 * cancels the folded damping there). D holds the reservoir diffusion
 * 2 gamma_b T_b on the bath momentum diagonals.
 */
class MomentSystem {
 public:
  explicit MomentSystem(const MomentParams& params) : prm_(params) {
    if (prm_.n < 3)
      throw std::runtime_error("MomentSystem(): need n >= 3, got " +
                               std::to_string(prm_.n));
    if (prm_.alpha <= 0 || prm_.gamma < 0 || prm_.gamma_left < 0 ||
        prm_.gamma_right < 0)
      throw std::runtime_error("MomentSystem(): rates must be nonnegative");
    const Eigen::Index n = prm_.n;
    dim_ = 2 * n - 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(4 * n));
    for (Eigen::Index b = 0; b < n - 1; ++b) {
      trip.emplace_back(r_index(b), p_index(b + 1), 1.0);
      trip.emplace_back(r_index(b), p_index(b), -1.0);
    }
    const double a2 = 2.0 * prm_.alpha;
    trip.emplace_back(p_index(0), r_index(0), a2);
    trip.emplace_back(p_index(0), p_index(0), -prm_.gamma_left);
    for (Eigen::Index x = 1; x < n - 1; ++x) {
      trip.emplace_back(p_index(x), r_index(x), a2);
      trip.emplace_back(p_index(x), r_index(x - 1), -a2);
      trip.emplace_back(p_index(x), p_index(x), -prm_.gamma);
    }
    trip.emplace_back(p_index(n - 1), r_index(n - 2), -a2);
    trip.emplace_back(p_index(n - 1), p_index(n - 1), -prm_.gamma_right);
    drift_.resize(dim_, dim_);
    drift_.setFromTriplets(trip.begin(), trip.end());
    drift_.makeCompressed();
    forcing_ = Eigen::VectorXd::Zero(dim_);
    forcing_[p_index(0)] = -prm_.tau_left;
    forcing_[p_index(n - 1)] = prm_.tau_right;
  }

  const MomentParams& params() const { return prm_; }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index r_index(Eigen::Index bond) const { return bond; }
  Eigen::Index p_index(Eigen::Index site) const { return prm_.n - 1 + site; }
  const Eigen::SparseMatrix<double>& drift() const { return drift_; }
  const Eigen::VectorXd& forcing() const { return forcing_; }

  /* Time derivative of (m, M) under the moment ODE above. M is the
   * uncentered second moment matrix.
   */
  void apply(const Eigen::VectorXd& m, const Eigen::MatrixXd& M,
             Eigen::VectorXd* dm, Eigen::MatrixXd* dM) const {
    if (m.size() != dim_ || M.rows() != dim_ || M.cols() != dim_)
      throw std::runtime_error("MomentSystem::apply(): dimension mismatch");
    *dm = drift_ * m + forcing_;
    dM->noalias() = drift_ * M;
    *dM += dM->transpose().eval();
    *dM += forcing_ * m.transpose() + m * forcing_.transpose();
    for (Eigen::Index x = 0; x < prm_.n; ++x) {
      const Eigen::Index i = p_index(x);
      (*dM)(i, i) += bath_diffusion(x);
      if (is_flip_site(x)) (*dM)(i, i) += 2.0 * prm_.gamma * M(i, i);
    }
  }

  bool is_flip_site(Eigen::Index site) const {
    return site > 0 && site < prm_.n - 1;
  }

  double bath_diffusion(Eigen::Index site) const {
    if (site == 0) return 2.0 * prm_.gamma_left * prm_.t_left;
    if (site == prm_.n - 1) return 2.0 * prm_.gamma_right * prm_.t_right;
    return 0.0;
  }

 private:
  MomentParams prm_;
  Eigen::Index dim_ = 0;
  Eigen::SparseMatrix<double> drift_;
  Eigen::VectorXd forcing_;
};

inline MomentSystem assemble_moment_generator(Eigen::Index n, double gamma,
                                              double gamma_left,
                                              double gamma_right,
                                              double t_left, double t_right,
                                              double tau_left,
                                              double tau_right) {
  MomentParams p;
  p.n = n;
  p.gamma = gamma;
  p.gamma_left = gamma_left;
  p.gamma_right = gamma_right;
  p.t_left = t_left;
  p.t_right = t_right;
  p.tau_left = tau_left;
  p.tau_right = tau_right;
  return MomentSystem(p);
}

struct NessSolution {
  Eigen::VectorXd mean;        // stationary first moments of z
  Eigen::MatrixXd covariance;  // centered second moments
  double p_s = 0.0;            // common drift velocity of the momenta
  Eigen::VectorXd tension;     // 2 alpha <r_b> per bond
  double j_s = 0.0;            // bulk energy current, rightward positive
  double j_left = 0.0;         // energy injected by the left reservoir
  double j_right = 0.0;        // energy injected by the right reservoir
  double p_sq_left = 0.0;      // <p_0^2>, the boundary kinetic temperature
  double p_sq_right = 0.0;     // <p_{n-1}^2>
};

/* Stationary moments. The first-moment system is a dense solve; the
 * second-moment system is solved over the packed upper triangle with a
 * sparse LU (about 2 n^2 unknowns coupled like a planar mesh).
 */
inline NessSolution solve_ness(const MomentSystem& sys) {
  const Eigen::Index D = sys.dim();
  const MomentParams& prm = sys.params();
  const Eigen::Index n = prm.n;

  Eigen::MatrixXd A = Eigen::MatrixXd(sys.drift());
  Eigen::PartialPivLU<Eigen::MatrixXd> mean_lu(A);
  Eigen::VectorXd mean = mean_lu.solve(-sys.forcing());
  if (!mean.allFinite())
    throw std::runtime_error("solve_ness(): singular first-moment system");

  // Packed index for the upper triangle, row-major: (i,j), i <= j.
  auto packed = [D](Eigen::Index i, Eigen::Index j) {
    if (i > j) std::swap(i, j);
    return i * D - i * (i - 1) / 2 + (j - i);
  };
  const Eigen::Index P = D * (D + 1) / 2;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(8 * P));
  const Eigen::SparseMatrix<double>& S = sys.drift();
  Eigen::SparseMatrix<double> Srow = S;  // row-major view for row scans
  Srow = S.transpose();
  // Row for pair (i,j): sum_k A_ik M_kj + sum_k A_jk M_ik (+ flip fix).
  for (Eigen::Index i = 0; i < D; ++i) {
    for (Eigen::Index j = i; j < D; ++j) {
      const Eigen::Index row = packed(i, j);
      for (Eigen::SparseMatrix<double>::InnerIterator it(Srow, i); it; ++it)
        trip.emplace_back(row, packed(it.row(), j), it.value());
      for (Eigen::SparseMatrix<double>::InnerIterator it(Srow, j); it; ++it)
        trip.emplace_back(row, packed(i, it.row()), it.value());
    }
  }
  for (Eigen::Index x = 1; x < n - 1; ++x) {
    const Eigen::Index i = sys.p_index(x);
    trip.emplace_back(packed(i, i), packed(i, i), 2.0 * prm.gamma);
  }
  Eigen::SparseMatrix<double> big(P, P);
  big.setFromTriplets(trip.begin(), trip.end());
  big.makeCompressed();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P);
  for (Eigen::Index x = 0; x < n; ++x) {
    const Eigen::Index i = sys.p_index(x);
    rhs[packed(i, i)] -= sys.bath_diffusion(x);
  }
  const Eigen::VectorXd& c = sys.forcing();
  for (Eigen::Index i = 0; i < D; ++i) {
    if (c[i] == 0.0) continue;
    for (Eigen::Index j = 0; j < D; ++j)
      rhs[packed(i, j)] -= c[i] * mean[j] + (i == j ? c[i] * mean[j] : 0.0);
  }

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(big);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_ness(): singular second-moment system");
  Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite())
    throw std::runtime_error("solve_ness(): second-moment solve failed");

  Eigen::MatrixXd M(D, D);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = i; j < D; ++j)
      M(i, j) = M(j, i) = sol[packed(i, j)];

  NessSolution out;
  out.mean = mean;
  out.covariance = M - mean * mean.transpose();
  out.p_s = mean[sys.p_index(n / 2)];
  out.tension.resize(n - 1);
  for (Eigen::Index b = 0; b < n - 1; ++b)
    out.tension[b] = 2.0 * prm.alpha * mean[sys.r_index(b)];
  // Bulk current through bond b: <j_{b,b+1}> = -2 alpha <p_b r_b>.
  const Eigen::Index b = n / 2;
  out.j_s = -2.0 * prm.alpha * M(sys.p_index(b), sys.r_index(b));
  const double pp0 = M(sys.p_index(0), sys.p_index(0));
  const double ppn = M(sys.p_index(n - 1), sys.p_index(n - 1));
  out.j_left = prm.gamma_left * (prm.t_left - pp0) - prm.tau_left * out.p_s;
  out.j_right = prm.gamma_right * (prm.t_right - ppn) + prm.tau_right * out.p_s;
  out.p_sq_left = pp0;
  out.p_sq_right = ppn;
  return out;
}

/* ---------------------------------------------------------------------- */
/* Fluctuation-dissipation identity for the flip chain                     */
/* ---------------------------------------------------------------------- */

/* For V(r) = r^2/2 on the ring with velocity flips, the bond energy
 * current is a lattice gradient plus a dissipation:
 *
 *   j_{x,x+1} = (phi_{x+1} - phi_x) + L h_x
 *   phi_x = -(1/2gamma)(r_x r_{x+1} + p_x^2)
 *   h_x   = (1/2gamma) r_{x+1}(p_x + p_{x+1}) + r_{x+1}^2/4
 *
 * where j_{x,x+1} = -p_x r_{x+1} and r_x joins sites x-1 and x. The sign
 * of the quadratic term in h_x is tied to that current convention; the
 * mirrored convention -p_{x+1} r_{x+1} pairs with -r_{x+1}^2/4 instead.
 * The identity is algebraic, so it is checked pointwise on random states
 * with the generator applied as an exact polynomial map.
 *
 * `quad_scale` multiplies the r^2/4 coefficient; values other than 1
 * break the identity and serve as a negative control.
 */
inline double check_fluctuation_dissipation(double gamma, int states,
                                            std::uint64_t seed,
                                            double quad_scale = 1.0) {
  if (gamma <= 0)
    throw std::runtime_error(
        "check_fluctuation_dissipation(): gamma must be > 0");
  const Eigen::Index n = 12;
  Philox rng(seed, 0);
  auto wrap = [n](Eigen::Index x) { return ((x % n) + n) % n; };
  double worst = 0.0;
  for (int s = 0; s < states; ++s) {
    Eigen::VectorXd r(n), p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r[i] = rng.normal();
      p[i] = rng.normal();
    }
    const Eigen::Index x = static_cast<Eigen::Index>(rng.next_u64() % n);
    const Eigen::Index x1 = wrap(x + 1), x2 = wrap(x + 2);

    auto h = [&](const Eigen::VectorXd& pp) {
      return r[x1] * (pp[x] + pp[x1]) / (2.0 * gamma) +
             quad_scale * r[x1] * r[x1] / 4.0;
    };
    // Drift part: sum_y dr_y d/dr_y + dp_y d/dp_y applied to h.
    const double dh_dr = (p[x] + p[x1]) / (2.0 * gamma) +
                         quad_scale * r[x1] / 2.0;
    const double drift = dh_dr * (p[x1] - p[x]) +
                         r[x1] / (2.0 * gamma) * (r[x1] - r[x]) +
                         r[x1] / (2.0 * gamma) * (r[x2] - r[x1]);
    // Flip part: (1/2) sum_z [h(p flipped at z) - h(p)], only z in
    // {x, x+1} touches h.
    double flips = 0.0;
    for (Eigen::Index z : {x, x1}) {
      Eigen::VectorXd pf = p;
      pf[z] = -pf[z];
      flips += 0.5 * (h(pf) - h(p));
    }
    const double lh = drift + gamma * flips;
    auto phi = [&](Eigen::Index y) {
      return -(r[y] * r[wrap(y + 1)] + p[y] * p[y]) / (2.0 * gamma);
    };
    const double current = -p[x] * r[x1];
    worst = std::max(worst, std::abs(current - (phi(x1) - phi(x)) - lh));
  }
  return worst;
}

/* ---------------------------------------------------------------------- */
/* Green-Kubo current correlation, harmonic chain with momentum exchange   */
/* ---------------------------------------------------------------------- */

/* Equilibrium correlation of the summed symmetrized energy current
 *
 *   C(t) = sum_x E[ j~_{0,e1}(0) j~_{x,x+e1}(t) ],
 *   j~_{x,x+e} = -(1/2) V'(q_{x+e} - q_x)(p_x + p_{x+e}),
 *
 * for V(r) = alpha r^2, pinning nu q^2, momentum exchange at rate gamma
 * per bond, temperature T. The summed current is sum_s b(s) P(s) with
 * P(s) = sum_x p_x q_{x+s} and odd coefficients b; on that odd span the
 * Liouville part of the generator cancels and the exchange part acts as
 * the lag Laplacian, so each Fourier mode of b decays independently at
 * rate gamma omega(k). Pairing through the Gibbs covariance gives
 *
 *   C(t) = T^2 int dk/(2pi)^d A(k) exp(-gamma omega(k) t),
 *   A(k) = 4 alpha^2 sin^2(k_1) / (2 nu + 2 alpha omega(k)),
 *
 * with omega(k) = sum_j (2 - 2 cos k_j). The pinning enters the amplitude
 * only, so the large-t decay is t^{-d/2} for nu = 0 (modes near k = 0
 * with finite amplitude) and t^{-d/2-1} for nu > 0 (amplitude vanishing
 * like k_1^2).
 */
struct GreenKuboResult {
  std::vector<double> time;
  std::vector<double> value;
  double tail_exponent = 0.0;  // log-log slope over the last decade of t
};

namespace internal {

inline double gk_amplitude(double nu, double alpha, double omega,
                           double sin_k1) {
  const double den = 2.0 * nu + 2.0 * alpha * omega;
  if (den <= 0.0) return 0.0;
  return 4.0 * alpha * alpha * sin_k1 * sin_k1 / den;
}

/* Integral over [0, pi]^d of A(k) e^{-gamma omega(k) t}, one adaptive
 * axis at a time. Nesting keeps the integrand smooth on each axis even
 * when the mass concentrates near k = 0 at large t. Outer levels must
 * tolerate the quadrature noise of the levels they enclose, so the
 * tolerances relax going outward.
 */
inline double gk_integral(double nu, double gamma, double alpha, int d,
                          double t) {
  static constexpr double kAbsTol[3] = {1e-13, 1e-10, 1e-9};
  static constexpr double kRelTol[3] = {1e-11, 1e-8, 1e-7};
  std::vector<double> k(static_cast<std::size_t>(d), 0.0);
  std::function<double(int)> axis = [&](int j) -> double {
    auto f = [&](double kj) {
      k[static_cast<std::size_t>(j)] = kj;
      if (j + 1 < d) return axis(j + 1);
      double omega = 0.0;
      for (int a = 0; a < d; ++a) {
        // 4 sin^2(k/2) = 2 - 2 cos k without the cancellation near k = 0,
        // which otherwise puts a noise floor under the error estimate.
        const double s = std::sin(0.5 * k[static_cast<std::size_t>(a)]);
        omega += 4.0 * s * s;
      }
      return gk_amplitude(nu, alpha, omega, std::sin(k[0])) *
             std::exp(-gamma * omega * t);
    };
    const int depth = d - 1 - j;  // 0 for the innermost axis
    return integrate(f, 0.0, M_PI, kAbsTol[depth], kRelTol[depth]).value;
  };
  return axis(0);
}

}  // namespace internal

inline GreenKuboResult gk_correlation(double nu, double gamma, double alpha,
                                      int d, std::vector<double> times,
                                      double temperature = 1.0) {
  if (d < 1 || d > 3)
    throw std::runtime_error("gk_correlation(): d must be 1, 2 or 3, got " +
                             std::to_string(d));
  if (gamma <= 0 || alpha <= 0 || nu < 0)
    throw std::runtime_error("gk_correlation(): need gamma, alpha > 0, nu >= 0");
  GreenKuboResult out;
  out.time = std::move(times);
  out.value.reserve(out.time.size());
  const double norm =
      temperature * temperature / std::pow(M_PI, static_cast<double>(d));
  for (double t : out.time) {
    if (t < 0) throw std::runtime_error("gk_correlation(): negative time");
    out.value.push_back(norm * internal::gk_integral(nu, gamma, alpha, d, t));
  }

  // Tail exponent: unweighted least squares of log C on log t over the
  // last decade of the grid.
  double tmax = 0.0;
  for (double t : out.time) tmax = std::max(tmax, t);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < out.time.size(); ++i) {
    if (out.time[i] < tmax / 10.0 || out.value[i] <= 0) continue;
    const double x = std::log(out.time[i]), y = std::log(out.value[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 3)
    out.tail_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  else
    out.tail_exponent = std::numeric_limits<double>::quiet_NaN();
  return out;
}

/* Finite-ring version of the same correlation (d = 1), the exact target
 * for Monte Carlo runs on n sites.
 */
inline std::vector<double> gk_correlation_ring(Eigen::Index n, double nu,
                                               double gamma, double alpha,
                                               const std::vector<double>& times,
                                               double temperature = 1.0) {
  if (n < 3) throw std::runtime_error("gk_correlation_ring(): need n >= 3");
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double k = 2.0 * M_PI * static_cast<double>(j) /
                       static_cast<double>(n);
      const double sh = std::sin(0.5 * k);
      const double omega = 4.0 * sh * sh;
      sum += internal::gk_amplitude(nu, alpha, omega, std::sin(k)) *
             std::exp(-gamma * omega * t);
    }
    out.push_back(temperature * temperature * sum / static_cast<double>(n));
  }
  return out;
}

/* Gibbs sample of the pinned or unpinned harmonic ring in (q, p), for
 * equilibrium Monte Carlo starts. Positions are synthesized mode by mode
 * with variance T / (2 nu + 2 alpha omega(k)); at nu = 0 the center of
 * mass is placed at zero, which no stretch- or momentum-functional can
 * see. Momenta are independent N(0, T).
 */
inline ChainState sample_harmonic_ring_gibbs(Eigen::Index n, double alpha,
                                             double nu, double temperature,
                                             std::uint64_t seed,
                                             std::uint64_t stream = 0) {
  if (n < 3 || n % 2 != 0)
    throw std::runtime_error(
        "sample_harmonic_ring_gibbs(): need even n >= 4, got " +
        std::to_string(n));
  ChainState s = make_qp_chain(n, Topology::kPeriodic);
  Philox rng(seed, stream);
  const double nd = static_cast<double>(n);
  s.q.setZero();
  for (Eigen::Index j = 1; j <= n / 2; ++j) {
    const double k = 2.0 * M_PI * static_cast<double>(j) / nd;
    const double sh = std::sin(0.5 * k);
    const double lam = 2.0 * nu + 8.0 * alpha * sh * sh;
    if (j < n / 2) {
      const double sd = std::sqrt(2.0 * temperature / (nd * lam));
      const double a = sd * rng.normal(), b = sd * rng.normal();
      for (Eigen::Index x = 0; x < n; ++x)
        s.q[x] += a * std::cos(k * static_cast<double>(x)) +
                  b * std::sin(k * static_cast<double>(x));
    } else {
      const double a = std::sqrt(temperature / (nd * lam)) * rng.normal();
      for (Eigen::Index x = 0; x < n; ++x)
        s.q[x] += (x % 2 == 0 ? a : -a);
    }
  }
  if (nu > 0) {
    const double a = std::sqrt(temperature / (nd * 2.0 * nu)) * rng.normal();
    s.q.array() += a;
  }
  const double sp = std::sqrt(temperature);
  for (Eigen::Index x = 0; x < n; ++x) s.p[x] = sp * rng.normal();
  return s;
}

/* Summed symmetrized energy current of a periodic (q, p) harmonic chain,
 * the observable whose autocorrelation gk_correlation_ring predicts.
 */
inline double ring_current_symmetric(const ChainState& s, double alpha) {
  if (s.family != ChainFamily::kQPChain || s.topology != Topology::kPeriodic)
    throw std::runtime_error(
        "ring_current_symmetric(): expects a periodic q-p chain");
  const Eigen::Index n = s.sites();
  double sum = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) {
    const Eigen::Index x1 = (x + 1) % n;
    sum += (s.q[x1] - s.q[x]) * (s.p[x] + s.p[x1]);
  }
  return -alpha * sum;
}

/* ---------------------------------------------------------------------- */
/* Energy correlation of the harmonic volume-exchange chain                */
/* ---------------------------------------------------------------------- */

/* One noise realization of u(t) = M(t) e_0 for the linear ring dynamics
 *
 *   du_x = (u_{x+1} - u_{x-1}) dt   plus exchange swaps at rate gamma/bond.
 *
 * The drift is a sum of bond rotations, integrated by a Strang split
 * into even and odd bond sets; each half is an exact product of plane
 * rotations, so |u| is conserved to round-off regardless of step size.
 * Swaps keep their exact Poisson times: within each drift window a swap
 * at offset sigma is commuted to the window start, where it becomes the
 * reflection I - w w^T in the back-rotated direction
 *
 *   w = exp(-sigma G)(e_b - e_{b+1}),   w_x = J_{x-b}(2 sigma) - J_{x-b-1}(2 sigma),
 *
 * with G the skew drift generator and J_m Bessel functions. Since
 * sigma < dt, w is supported on a few sites up to terms below round-off,
 * so each event costs O(1) instead of a lattice-wide drift pass. The
 * applied reflection is exactly orthogonal, hence M(t) is orthogonal and
 * sum_x u_x(t)^2 = 1 identically.
 */
struct PropagatorSample {
  Eigen::VectorXd u;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double time = 0.0;
};

namespace internal {

inline void rotate_bonds(Eigen::VectorXd& u, Eigen::Index parity,
                         double angle) {
  const Eigen::Index n = u.size();
  const double c = std::cos(angle), s = std::sin(angle);
  for (Eigen::Index x = parity; x < n; x += 2) {
    const Eigen::Index x1 = (x + 1) % n;
    const double a = u[x], b = u[x1];
    u[x] = c * a + s * b;
    u[x1] = -s * a + c * b;
  }
}

inline void drift_span(Eigen::VectorXd& u, double span, double dt_max) {
  if (span <= 0) return;
  const int steps = std::max(1, static_cast<int>(std::ceil(span / dt_max)));
  const double h = span / steps;
  for (int i = 0; i < steps; ++i) {
    rotate_bonds(u, 0, 0.5 * h);
    rotate_bonds(u, 1, h);
    rotate_bonds(u, 0, 0.5 * h);
  }
}

/* J_0(w)..J_mmax(w) by the ascending series, accurate to round-off for
 * the small arguments that arise here (w <= 2 dt).
 */
inline void bessel_j_row(double w, int mmax, double* out) {
  const double h = 0.5 * w;
  const double q = h * h;
  double lead = 1.0;  // h^m / m!
  for (int m = 0; m <= mmax; ++m) {
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < 40; ++j) {
      term *= -q / (static_cast<double>(j) * static_cast<double>(m + j));
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    out[m] = lead * sum;
    lead *= h / static_cast<double>(m + 1);
  }
}

/* Half-width of the Bessel band needed so the discarded taps are below
 * 1e-15: J_m(2 sigma) <= sigma^m / m!.
 */
inline int bessel_band(double dt) {
  int w = 2;
  double bound = dt * dt / 2.0;
  while (bound > 1e-15 && w < 64) {
    ++w;
    bound *= dt / static_cast<double>(w);
  }
  return w;
}

}  // namespace internal

inline PropagatorSample propagate_impulse(Eigen::Index lattice, double gamma,
                                          double t, std::uint64_t seed,
                                          std::uint64_t stream = 0,
                                          double dt = 0.05) {
  if (lattice < 4 || lattice % 2 != 0)
    throw std::runtime_error("propagate_impulse(): need even lattice >= 4");
  if (t < 0 || gamma < 0)
    throw std::runtime_error("propagate_impulse(): need t, gamma >= 0");
  if (dt <= 0 || dt > 0.5)
    throw std::runtime_error("propagate_impulse(): need 0 < dt <= 0.5");
  PropagatorSample out;
  out.seed = seed;
  out.stream = stream;
  out.time = t;
  out.u = Eigen::VectorXd::Zero(lattice);
  out.u[0] = 1.0;
  Philox rng(seed, stream);

  const double total_rate = gamma * static_cast<double>(lattice);
  const int band = internal::bessel_band(dt);
  std::vector<double> bj(static_cast<std::size_t>(band) + 2, 0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(lattice);
  std::vector<Eigen::Index> touched;
  touched.reserve(static_cast<std::size_t>(2 * band) + 4);
  auto wrap = [lattice](Eigen::Index x) {
    return ((x % lattice) + lattice) % lattice;
  };

  double window_start = 0.0;
  double next_event = total_rate > 0
                          ? rng.exponential(total_rate)
                          : std::numeric_limits<double>::infinity();
  while (window_start < t) {
    const double window_end = std::min(window_start + dt, t);
    while (next_event < window_end) {
      const double sigma = next_event - window_start;
      const Eigen::Index b = static_cast<Eigen::Index>(
          rng.next_u64() % static_cast<std::uint64_t>(lattice));
      internal::bessel_j_row(2.0 * sigma, band + 1, bj.data());
      touched.clear();
      // w_x = J_{x-b}(2 sigma) - J_{x-b-1}(2 sigma), J_{-m} = (-1)^m J_m.
      for (Eigen::Index m = -band; m <= band + 1; ++m) {
        const double j1 =
            std::abs(m) <= band
                ? (m >= 0 ? bj[static_cast<std::size_t>(m)]
                          : (m % 2 == 0 ? 1.0 : -1.0) *
                                bj[static_cast<std::size_t>(-m)])
                : 0.0;
        const Eigen::Index m2 = m - 1;
        const double j2 =
            std::abs(m2) <= band
                ? (m2 >= 0 ? bj[static_cast<std::size_t>(m2)]
                           : (m2 % 2 == 0 ? 1.0 : -1.0) *
                                 bj[static_cast<std::size_t>(-m2)])
                : 0.0;
        const double tap = j1 - j2;
        if (tap == 0.0) continue;
        const Eigen::Index x = wrap(b + m);
        if (w[x] == 0.0) touched.push_back(x);
        w[x] += tap;
      }
      double ww = 0.0, wu = 0.0;
      for (Eigen::Index x : touched) {
        ww += w[x] * w[x];
        wu += w[x] * out.u[x];
      }
      const double scale = 2.0 * wu / ww;
      for (Eigen::Index x : touched) {
        out.u[x] -= scale * w[x];
        w[x] = 0.0;
      }
      next_event += rng.exponential(total_rate);
    }
    internal::drift_span(out.u, window_end - window_start, dt);
    window_start = window_end;
  }

  const double norm = out.u.squaredNorm();
  if (std::abs(norm - 1.0) > 1e-8)
    throw std::runtime_error("propagate_impulse(): norm drift " +
                             std::to_string(norm - 1.0));
  if (!out.u.allFinite())
    throw std::runtime_error("propagate_impulse(): non-finite state");
  return out;
}

/* Noise-averaged energy correlation S_t(x) = E[u_x(t)^2] of the harmonic
 * volume-exchange ring, reported on lattice offsets x in
 * [-L/2, L/2) with L = lattice_factor * n. The correlation of
 * eta_x(t)^2 with eta_0(0)^2 in equilibrium reduces to E[M(t)_{x0}^2] by
 * Gaussianity, and each replica's profile sums to 1 exactly because M(t)
 * is orthogonal; the replica-averaged table is renormalized to unit sum
 * after that per-replica tolerance check.
 *
 * The lattice is larger than the window of interest so that the periodic
 * images stay out of the reported range for |t| up to a few sound
 * crossings of the window.
 */
struct EnergyCorrelationTable {
  std::vector<long> x;
  Eigen::VectorXd value;
  Eigen::VectorXd std_error;
  Eigen::Index replicas = 0;
};

inline EnergyCorrelationTable energy_correlation_eta(
    Eigen::Index n, double gamma, double t, Eigen::Index replicas,
    std::uint64_t seed, Eigen::Index lattice_factor = 16) {
  if (n < 4 || (n & (n - 1)) != 0)
    throw std::runtime_error(
        "energy_correlation_eta(): n must be a power of two >= 4, got " +
        std::to_string(n));
  if (replicas < 2)
    throw std::runtime_error("energy_correlation_eta(): need >= 2 replicas");
  if (lattice_factor < 1)
    throw std::runtime_error(
        "energy_correlation_eta(): lattice_factor must be >= 1");
  const Eigen::Index L = n * lattice_factor;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(L);
  for (Eigen::Index rep = 0; rep < replicas; ++rep) {
    PropagatorSample ps = propagate_impulse(
        L, gamma, t, seed, static_cast<std::uint64_t>(rep));
    const Eigen::VectorXd sq = ps.u.array().square();
    sum += sq;
    sumsq += sq.array().square().matrix();
  }
  const double rn = static_cast<double>(replicas);
  Eigen::VectorXd mean = sum / rn;
  Eigen::VectorXd var =
      (sumsq / rn - mean.array().square().matrix()) * (rn / (rn - 1.0));

  EnergyCorrelationTable out;
  out.replicas = replicas;
  out.x.resize(static_cast<std::size_t>(L));
  out.value.resize(L);
  out.std_error.resize(L);
  const double total = mean.sum();
  for (Eigen::Index i = 0; i < L; ++i) {
    const long off = static_cast<long>(i >= L / 2 ? i - L : i);
    const Eigen::Index slot = (i + L / 2) % L;  // ascending offsets
    out.x[static_cast<std::size_t>(slot)] = off;
    out.value[slot] = mean[i] / total;
    out.std_error[slot] =
        std::sqrt(std::max(0.0, var[i]) / rn) / total;
  }
  return out;
}

}  // namespace chainflux
