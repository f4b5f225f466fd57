// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace chainflux {

/* Fundamental solution of the skew fractional heat equation
 *
 *   d_t u = -(1/sqrt(2)) [ (-Lap)^{3/4} - grad (-Lap)^{1/4} ] u,
 *
 * i.e. the maximally asymmetric 3/2-stable density. In Fourier
 * variables the propagator is the multiplier
 *
 *   exp( -(t/sqrt(2)) |k|^{3/2} (1 - i sgn k) ),
 *
 * inverted with the e^{-ikx} convention, which orients the heavy
 * |x|^{-5/2} tail to the left. That orientation is pinned by the
 * microscopic model this kernel describes: evolving the exact second
 * moment of an impulse under du_x = u_{x+1} - u_{x-1} plus bond swaps
 * gives a profile skewed the same way, and the two must agree for the
 * rescaled lattice correlation to converge to P_t.
 *
 * The inversion runs as a Fourier series on the periodized window
 * spanned by the requested grid. Because the k = 0 coefficient of that
 * series is exactly 1, the trapezoid mass of the returned table equals
 * 1 to round-off; the price is that the far tails alias into the
 * window, so the window must be wide enough for the wrapped mass to be
 * negligible (checked against the stable-law tail asymptotics below).
 */
struct KernelTable {
  Eigen::VectorXd x;      // evaluation grid, uniform ascending
  Eigen::VectorXd p;      // kernel values (real part)
  double imag_residue;    // largest |imaginary part| seen, should be ~0
  double truncated_mass;  // estimated stable-tail mass outside the grid
};

namespace internal {

/* Mass of the 3/2-stable density beyond distance w from the origin.
 * The heavy tail sits on one side only; with scale sigma^{3/2} =
 * t/sqrt(2) the classical tail formula gives
 *
 *   P(|X| > w) ~ C_{3/2} sigma^{3/2} w^{-3/2},  C_{3/2} = 1/sqrt(2 pi),
 *
 * so the coefficient is t / (2 sqrt(pi)). The light side decays like
 * exp(-c w^3) and is ignored.
 */
inline double stable_tail_mass(double t, double w) {
  if (w <= 0.0) return 1.0;
  return t / (2.0 * std::sqrt(M_PI)) * std::pow(w, -1.5);
}

}  // namespace internal

inline KernelTable skew_fractional_kernel(double t,
                                          const Eigen::VectorXd& grid) {
  if (!(t > 0.0))
    throw std::runtime_error("skew_fractional_kernel(): t must be > 0");
  const Eigen::Index m = grid.size();
  if (m < 8)
    throw std::runtime_error(
        "skew_fractional_kernel(): need at least 8 grid points");
  const double dx = (grid[m - 1] - grid[0]) / static_cast<double>(m - 1);
  if (!(dx > 0.0))
    throw std::runtime_error(
        "skew_fractional_kernel(): grid must be ascending");
  for (Eigen::Index j = 1; j < m; ++j)
    if (std::abs(grid[j] - grid[j - 1] - dx) > 1e-8 * dx)
      throw std::runtime_error(
          "skew_fractional_kernel(): grid must be uniform");
  if (grid[0] > 0.0 || grid[m - 1] < 0.0 ||
      std::abs(grid[0] + grid[m - 1]) > 0.5 * (grid[m - 1] - grid[0]))
    throw std::runtime_error(
        "skew_fractional_kernel(): grid must bracket the peak near 0");

  const double half_width = std::min(-grid[0], grid[m - 1]);
  const double truncated = internal::stable_tail_mass(t, half_width);
  if (truncated > 1e-6)
    throw std::runtime_error(
        "skew_fractional_kernel(): truncated mass " +
        std::to_string(truncated) +
        " exceeds 1e-6, widen the grid (TruncationError)");

  // Spectral cutoff where the damping reaches 1e-12, then the series
  // resolution set by the periodization window.
  const double a = t / std::sqrt(2.0);
  const double k_cut = std::pow(12.0 * std::log(10.0) / a, 2.0 / 3.0);
  const double period = static_cast<double>(m) * dx;
  const double dk = 2.0 * M_PI / period;
  const Eigen::Index m_cut = static_cast<Eigen::Index>(std::ceil(k_cut / dk));
  if (2 * m_cut + 1 > m)
    throw std::runtime_error(
        "skew_fractional_kernel(): grid spacing too coarse for the "
        "spectral cutoff, refine below " +
        std::to_string(M_PI / k_cut));

  std::vector<std::complex<double>> spectrum(
      static_cast<std::size_t>(m), std::complex<double>(0.0, 0.0));
  for (Eigen::Index j = 0; j <= m_cut; ++j) {
    const double k = dk * static_cast<double>(j);
    const double damp = a * std::pow(k, 1.5);
    // conjugated multiplier exp(-damp (1 + i)), anchored at the left
    // grid edge
    const std::complex<double> w =
        std::exp(std::complex<double>(-damp, -damp + k * grid[0]));
    spectrum[static_cast<std::size_t>(j)] = w;
    if (j > 0) spectrum[static_cast<std::size_t>(m - j)] = std::conj(w);
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> values;
  fft.inv(values, spectrum);  // (1/m) sum_j c_j e^{+2 pi i j l / m}

  KernelTable out;
  out.x = grid;
  out.p.resize(m);
  out.imag_residue = 0.0;
  out.truncated_mass = truncated;
  const double scale = static_cast<double>(m) / period;
  for (Eigen::Index l = 0; l < m; ++l) {
    out.p[l] = scale * values[static_cast<std::size_t>(l)].real();
    out.imag_residue =
        std::max(out.imag_residue,
                 scale * std::abs(values[static_cast<std::size_t>(l)].imag()));
  }
  return out;
}

}  // namespace chainflux
