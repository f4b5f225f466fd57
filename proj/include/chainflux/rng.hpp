// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chainflux authors

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace chainflux {

/* Counter-based pseudo-random generator (Philox4x32, 10 rounds).
 *
 * Chosen over <random> engines because the output stream is specified
 * bit-for-bit by (seed, stream, counter) on every platform, which is what
 * makes run manifests reproducible, and because disjoint streams for
 * replicas are obtained by changing the stream word instead of jumping.
 *
 * All variate transforms (uniform, normal, exponential, Poisson, Gamma)
 * are implemented here rather than via std::*_distribution, whose
 * algorithms are unspecified and differ across standard libraries.
 */
class Philox {
 public:
  // Published in run summaries so outputs can be tied to the exact stream.
  static constexpr const char* kIdentifier = "philox4x32-10/v1";

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream),
             static_cast<std::uint32_t>(stream >> 32)} {}

  // One keyed 128-bit block. Exposed so tests can pin known-answer vectors
  // and so derived seeds can be computed without constructing a generator.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Strictly inside (0,1): 53-bit grid offset by half a step, so logarithms
  // of either u or 1-u are safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the partner variate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) {
    if (!(rate > 0.0))
      throw std::runtime_error("Philox::exponential(): rate must be > 0, got " +
                               std::to_string(rate));
    return -std::log(uniform()) / rate;
  }

  // Exact for any mean: Poisson(m) = Poisson(30) + Poisson(m - 30) lets the
  // product method run entirely above the underflow threshold.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0))
      throw std::runtime_error("Philox::poisson(): mean must be >= 0, got " +
                               std::to_string(mean));
    std::uint64_t n = 0;
    while (mean > 30.0) {
      n += poisson_product(30.0);
      mean -= 30.0;
    }
    return n + poisson_product(mean);
  }

  // Marsaglia-Tsang squeeze for shape >= 1, boosted for shape < 1.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw std::runtime_error(
          "Philox::gamma(): shape and rate must be > 0, got shape=" +
          std::to_string(shape) + " rate=" + std::to_string(rate));
    double boost = 1.0;
    if (shape < 1.0) {
      boost = std::pow(uniform(), 1.0 / shape);
      shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return boost * d * v / rate;
    }
  }

 private:
  std::uint64_t poisson_product(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t n = 0;
    double prod = uniform();
    while (prod > limit) {
      ++n;
      prod *= uniform();
    }
    return n;
  }

  void refill() {
    buf_ = block(ctr_, key_);
    if (++ctr_[0] == 0) ++ctr_[1];
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace chainflux
