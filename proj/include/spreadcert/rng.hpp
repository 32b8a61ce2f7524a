#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace spreadcert {

/// SplitMix64 step; used for seeding and for deriving independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic xoshiro256++ stream with cached Box-Muller gaussians.
///
/// All sampling in the artifact goes through this engine rather than
/// <random> distributions, whose sequences differ across standard-library
/// implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; generates two at a time.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = next_uniform();
    // Guard the log; u1 == 0 has probability 2^-53 per draw but would poison
    // the stream deterministically if it ever occurs.
    while (u1 <= 0.0) u1 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * next_uniform();
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  Eigen::VectorXd gaussian_vector(int n, double stddev = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = stddev * next_gaussian();
    return v;
  }

  /// Uniform point on the unit sphere in R^d.
  Eigen::VectorXd unit_vector(int d) {
    Eigen::VectorXd v = gaussian_vector(d);
    double norm = v.norm();
    while (norm == 0.0) {
      v = gaussian_vector(d);
      norm = v.norm();
    }
    return v / norm;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Child stream keyed by up to two tags. Streams for distinct tags are
/// independent for all practical purposes, which keeps per-column and
/// per-replicate sampling stable under internal parallelization.
inline RngStream derive_stream(std::uint64_t master, std::uint64_t tag_a,
                               std::uint64_t tag_b = 0) {
  std::uint64_t h = master;
  h ^= splitmix64(tag_a) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::uint64_t t = tag_b + 0x7f4a7c159e3779b9ULL;
  h ^= splitmix64(t) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return RngStream(h);
}

}  // namespace spreadcert
