// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chainflux/potentials.hpp>
#include <chainflux/thermodynamics.hpp>

#include <cmath>
#include <vector>

using namespace chainflux;

TEST_CASE("potential_eval closed forms") {
  auto h = potential_eval(harmonic(0.5), 1.0);
  CHECK(h.V == 0.5);
  CHECK(h.dV == 1.0);
  CHECK(h.d2V == 1.0);

  auto k = potential_eval(exponential_kvm(), 0.0);
  CHECK(k.V == 0.0);
  CHECK(k.dV == 0.0);
  CHECK(k.d2V == 1.0);

  auto f = potential_eval(fpu_quartic(), 1.0);
  CHECK(f.V == 0.75);
  CHECK(f.dV == 2.0);
  CHECK(f.d2V == 4.0);

  auto r = potential_eval(rotor(), M_PI / 2);
  CHECK(r.V == doctest::Approx(1.0));
  CHECK(r.dV == doctest::Approx(1.0));
  CHECK(r.d2V == doctest::Approx(0.0).epsilon(1e-15));

  auto p = potential_eval(pinned_harmonic(2.0, 0.3), -1.5);
  CHECK(p.V == doctest::Approx(4.5));
  CHECK(p.dV == doctest::Approx(-6.0));
  CHECK(p.d2V == doctest::Approx(4.0));
}

TEST_CASE("potential spec validation") {
  CHECK_THROWS_AS(harmonic(0.0), std::runtime_error);
  CHECK_THROWS_AS(harmonic(-1.0), std::runtime_error);
  CHECK_THROWS_AS(pinned_harmonic(1.0, -0.1), std::runtime_error);
}

TEST_CASE("harmonic thermodynamics against gaussian moments") {
  // Weight exp(-beta alpha r^2 - lambda r) is Gaussian with
  // mean -lambda/(2 alpha beta), variance 1/(2 alpha beta), and
  // log Z = log sqrt(pi/(alpha beta)) + lambda^2/(4 alpha beta).
  auto p = thermo_functions(harmonic(0.5), 1.0, 0.0);
  CHECK(p.e == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(p.v == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(p.tau == 0.0);
  CHECK(p.logZ == doctest::Approx(0.91893853320467274).epsilon(1e-10));

  p = thermo_functions(harmonic(0.5), 2.0, 1.0);
  CHECK(p.v == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(p.e == doctest::Approx(0.375).epsilon(1e-10));
  CHECK(p.tau == -0.5);
  CHECK(p.logZ == doctest::Approx(0.82236494292470008).epsilon(1e-10));

  // Pinning must not change the stretch marginal.
  auto q = thermo_functions(pinned_harmonic(0.5, 2.0), 2.0, 1.0);
  CHECK(q.e == doctest::Approx(p.e).epsilon(1e-12));
  CHECK(q.v == doctest::Approx(p.v).epsilon(1e-12));
}

TEST_CASE("exponential chain thermodynamics against the gamma law") {
  // xi = e^{-eta} turns the weight into Gamma(beta+lambda, beta), giving
  //   log Z = beta + lgamma(beta+lambda) - (beta+lambda) log beta,
  //   v = -digamma(beta+lambda) + log beta,   e = v + lambda/beta.
  // At beta=2, lambda=-1 the shape is 1 and digamma(1) = -0.5772156649...
  auto p = thermo_functions(exponential_kvm(), 2.0, -1.0);
  CHECK(p.v == doctest::Approx(1.27036284546147817).epsilon(1e-9));
  CHECK(p.e == doctest::Approx(0.77036284546147817).epsilon(1e-9));
  CHECK(p.tau == doctest::Approx(0.5));
  CHECK(p.logZ == doctest::Approx(1.30685281944005469).epsilon(1e-9));

  // beta=3, lambda=1/2: shape 3.5, digamma(3.5) = 1.10315664064524319.
  p = thermo_functions(exponential_kvm(), 3.0, 0.5);
  CHECK(p.v == doctest::Approx(-0.00454435197713350).epsilon(1e-8));
  CHECK(p.e == doctest::Approx(0.16212231468953317).epsilon(1e-8));
  CHECK(p.logZ == doctest::Approx(0.35583059200869026).epsilon(1e-8));

  // tau = -(e - v) is the tension relation for this family.
  CHECK(p.tau == doctest::Approx(-(p.e - p.v)).epsilon(1e-8));
}

TEST_CASE("rotor thermodynamics against bessel constants") {
  // Z = 2 pi e^{-beta} I0(beta); <cos eta> = I1/I0. At beta = 1,
  // I0 = 1.26606587775200834 and I1 = 0.56515910399248503.
  auto p = thermo_functions(rotor(), 1.0, 0.0);
  CHECK(p.e == doctest::Approx(1.0 - 0.44638996589659617).epsilon(1e-10));
  CHECK(p.v == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.logZ == doctest::Approx(1.07379142491652457).epsilon(1e-9));

  // Independent check: periodic trapezoid sums are spectrally accurate.
  const int m = 512;
  double z = 0.0, ec = 0.0;
  for (int i = 0; i < m; ++i) {
    const double x = -M_PI + 2.0 * M_PI * i / m;
    const double w = std::exp(-(1.0 - std::cos(x)));
    z += w;
    ec += (1.0 - std::cos(x)) * w;
  }
  ec /= z;
  z *= 2.0 * M_PI / m;
  CHECK(p.logZ == doctest::Approx(std::log(z)).epsilon(1e-12));
  CHECK(p.e == doctest::Approx(ec).epsilon(1e-12));
}

TEST_CASE("tension identity and integrability errors") {
  for (const auto& spec :
       {harmonic(1.0), fpu_quartic(), exponential_kvm()}) {
    const auto p = thermo_functions(spec, 2.0, 1.0);
    CHECK(p.tau == -0.5);  // exact identity of the record
  }
  CHECK_THROWS_AS(thermo_functions(harmonic(1.0), 0.0, 0.0),
                  std::runtime_error);
  CHECK_THROWS_AS(thermo_functions(harmonic(1.0), -1.0, 0.0),
                  std::runtime_error);
  CHECK_THROWS_AS(thermo_functions(exponential_kvm(), 1.0, -1.0),
                  std::runtime_error);
  CHECK_THROWS_AS(thermo_functions(exponential_kvm(), 1.0, -1.5),
                  std::runtime_error);
  CHECK_THROWS_AS(thermo_functions(rotor(), 1.0, 0.5), std::runtime_error);
}

TEST_CASE("logZ derivatives match minus e and minus v") {
  struct Point { PotentialSpec spec; double beta, lambda; };
  const std::vector<Point> pts = {
      {harmonic(0.5), 1.0, 0.0},       {harmonic(2.0), 0.7, -0.4},
      {pinned_harmonic(1.0, 0.5), 1.5, 0.8}, {fpu_quartic(), 1.3, 0.4},
      {fpu_quartic(), 0.6, -1.1},      {exponential_kvm(), 2.0, -1.0},
      {exponential_kvm(), 1.0, 2.0},   {rotor(), 0.8, 0.0},
      {rotor(), 2.5, 0.0},
  };
  for (const auto& pt : pts) {
    const auto p = thermo_functions(pt.spec, pt.beta, pt.lambda);
    const double hb = 1e-5 * pt.beta;
    const double dbeta =
        (thermo_functions(pt.spec, pt.beta + hb, pt.lambda).logZ -
         thermo_functions(pt.spec, pt.beta - hb, pt.lambda).logZ) /
        (2.0 * hb);
    CHECK(dbeta == doctest::Approx(-p.e).epsilon(1e-6));
    if (pt.spec.family != PotentialFamily::kRotor) {
      const double hl = 1e-5 * (1.0 + std::abs(pt.lambda));
      const double dlam =
          (thermo_functions(pt.spec, pt.beta, pt.lambda + hl).logZ -
           thermo_functions(pt.spec, pt.beta, pt.lambda - hl).logZ) /
          (2.0 * hl);
      CHECK(dlam == doctest::Approx(-p.v).epsilon(1e-6));
    }
  }
}

TEST_CASE("entropy recovers conjugate parameters") {
  // Harmonic closed form: e = alpha v^2 + 1/(2 beta) inverts exactly.
  auto ep = entropy_legendre(harmonic(0.5), 0.5, 0.0);
  CHECK(ep.beta == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ep.lambda == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ep.S == doctest::Approx(0.5 + 0.91893853320467274).epsilon(1e-9));

  struct Point { PotentialSpec spec; double beta, lambda; };
  const std::vector<Point> pts = {
      {harmonic(0.5), 2.0, 1.0},
      {fpu_quartic(), 1.3, 0.4},
      {fpu_quartic(), 0.9, -0.7},
      {exponential_kvm(), 2.0, -1.0},
      {exponential_kvm(), 1.4, 0.9},
      {rotor(), 1.7, 0.0},
  };
  for (const auto& pt : pts) {
    const auto p = thermo_functions(pt.spec, pt.beta, pt.lambda);
    const auto back = entropy_legendre(pt.spec, p.e, p.v);
    CHECK(back.beta == doctest::Approx(pt.beta).epsilon(1e-6));
    CHECK(back.lambda ==
          doctest::Approx(pt.lambda).epsilon(1e-6).scale(1.0));
    // Legendre value: S = beta e + lambda v + logZ at the minimizer.
    CHECK(back.S == doctest::Approx(pt.beta * p.e + pt.lambda * p.v + p.logZ)
                        .epsilon(1e-8));
  }
}

TEST_CASE("entropy rejects states outside the domain") {
  // Harmonic needs e > alpha v^2 (positive spread).
  CHECK_THROWS_AS(entropy_legendre(harmonic(0.5), 0.1, 1.0),
                  std::runtime_error);
  // Rotor carries no volume.
  CHECK_THROWS_AS(entropy_legendre(rotor(), 0.5, 0.3), std::runtime_error);
}
