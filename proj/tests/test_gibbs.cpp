// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chainflux/gibbs.hpp>
#include <chainflux/thermodynamics.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace chainflux;

namespace {

struct SampleStats {
  double mean_eta, se_eta, mean_V, se_V;
};

SampleStats stats(const PotentialSpec& spec, const Eigen::VectorXd& eta) {
  const double n = static_cast<double>(eta.size());
  SampleStats s{};
  double sum = 0, sum2 = 0, sumV = 0, sumV2 = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double V = potential(spec, eta[i]);
    sum += eta[i];
    sum2 += eta[i] * eta[i];
    sumV += V;
    sumV2 += V * V;
  }
  s.mean_eta = sum / n;
  s.mean_V = sumV / n;
  s.se_eta = std::sqrt((sum2 / n - s.mean_eta * s.mean_eta) / n);
  s.se_V = std::sqrt((sumV2 / n - s.mean_V * s.mean_V) / n);
  return s;
}

}  // namespace

TEST_CASE("sampling is deterministic in (seed, stream)") {
  const auto a = gibbs_sample(fpu_quartic(), 1.3, 0.4, 64, 99, 0);
  const auto b = gibbs_sample(fpu_quartic(), 1.3, 0.4, 64, 99, 0);
  const auto c = gibbs_sample(fpu_quartic(), 1.3, 0.4, 64, 99, 1);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
}

TEST_CASE("harmonic marginal variance") {
  const auto eta = gibbs_sample(harmonic(0.5), 1.0, 0.0, 100000, 42);
  const double mean = eta.mean();
  const double var = (eta.array() - mean).square().mean();
  // Var of the sample variance of a Gaussian is 2 sigma^4 / n.
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / 100000.0));
  CHECK(std::abs(mean) < 4.0 / std::sqrt(100000.0));
}

TEST_CASE("exponential chain passes a gamma goodness-of-fit test") {
  // xi = e^{-eta} should be Gamma(shape = beta + lambda, rate = beta).
  // Shapes 1 and 3 keep the reference CDF in closed form.
  const int n = 100000;
  // One-sample Kolmogorov-Smirnov critical value at alpha = 0.001.
  const double crit = 1.949 / std::sqrt(static_cast<double>(n));

  SUBCASE("shape 1") {
    const auto eta = gibbs_sample(exponential_kvm(), 2.0, -1.0, n, 7);
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = 1.0 - std::exp(-2.0 * std::exp(-eta[i]));
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
      d = std::max(d, std::abs(u[i] - (i + 1.0) / n));
      d = std::max(d, std::abs(u[i] - i / static_cast<double>(n)));
    }
    CHECK(d < crit);
  }

  SUBCASE("shape 3") {
    const auto eta = gibbs_sample(exponential_kvm(), 2.0, 1.0, n, 8);
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) {
      const double x = 2.0 * std::exp(-eta[i]);
      u[i] = 1.0 - std::exp(-x) * (1.0 + x + 0.5 * x * x);
    }
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
      d = std::max(d, std::abs(u[i] - (i + 1.0) / n));
      d = std::max(d, std::abs(u[i] - i / static_cast<double>(n)));
    }
    CHECK(d < crit);
  }
}

TEST_CASE("rotor cosine mean matches the bessel ratio") {
  const int n = 100000;
  const auto eta = gibbs_sample(rotor(), 1.0, 0.0, n, 21);
  double c = 0, c2 = 0;
  for (int i = 0; i < n; ++i) {
    c += std::cos(eta[i]);
    c2 += std::cos(eta[i]) * std::cos(eta[i]);
  }
  c /= n;
  const double se = std::sqrt((c2 / n - c * c) / n);
  // I1(1)/I0(1) = 0.44638996589659617.
  CHECK(std::abs(c - 0.44638996589659617) < 4.0 * se);
}

TEST_CASE("sampler moments match quadrature at three points per family") {
  struct Point { PotentialSpec spec; double beta, lambda; };
  const std::vector<Point> pts = {
      {harmonic(0.5), 1.0, 0.0},    {harmonic(0.5), 2.0, 1.0},
      {harmonic(3.0), 0.6, -0.8},   {pinned_harmonic(1.0, 0.7), 1.2, 0.5},
      {pinned_harmonic(2.0, 0.0), 2.4, -1.3}, {pinned_harmonic(0.5, 3.0), 0.9, 0.0},
      {fpu_quartic(), 1.0, 0.0},    {fpu_quartic(), 1.3, 0.4},
      {fpu_quartic(), 0.6, -1.1},   {exponential_kvm(), 2.0, -1.0},
      {exponential_kvm(), 1.0, 2.0}, {exponential_kvm(), 3.0, 0.5},
      {rotor(), 0.5, 0.0},          {rotor(), 1.0, 0.0},
      {rotor(), 2.5, 0.0},
  };
  std::uint64_t stream = 0;
  for (const auto& pt : pts) {
    const auto p = thermo_functions(pt.spec, pt.beta, pt.lambda);
    const auto eta = gibbs_sample(pt.spec, pt.beta, pt.lambda, 40000,
                                  1234, ++stream);
    const auto s = stats(pt.spec, eta);
    CHECK(std::abs(s.mean_eta - p.v) < 4.5 * s.se_eta);
    CHECK(std::abs(s.mean_V - p.e) < 4.5 * s.se_V);
  }
}

TEST_CASE("sampler rejects non-integrable parameters") {
  Philox rng(1);
  CHECK_THROWS_AS(GibbsSampler(exponential_kvm(), 1.0, -1.0),
                  std::runtime_error);
  CHECK_THROWS_AS(GibbsSampler(rotor(), 1.0, 0.1), std::runtime_error);
  CHECK_THROWS_AS(GibbsSampler(harmonic(1.0), -2.0, 0.0), std::runtime_error);
  CHECK_THROWS_AS(GibbsSampler(harmonic(1.0), 1.0, 0.0).sample(0, rng),
                  std::runtime_error);
}
