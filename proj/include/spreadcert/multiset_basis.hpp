#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "spreadcert/errors.hpp"

namespace spreadcert {
namespace symbasis {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline std::int64_t binomial_i64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Lexicographic ranking of non-decreasing k-tuples over {0..d-1}
/// (multisets of size k). Rank order matches enumeration order.
class MultisetIndexer {
 public:
  MultisetIndexer() = default;
  MultisetIndexer(int d, int k) : d_(d), k_(k), stride_(d + 1) {
    // prefix[i*(d+1)+u]: rank increment for choosing value v at position i
    // after previous value p is prefix[i][v] - prefix[i][p].
    prefix_.assign(static_cast<std::size_t>(k) * stride_, 0);
    for (int i = 0; i < k; ++i) {
      for (int u = 0; u < d; ++u) {
        const int suffix_len = k - 1 - i;
        prefix_[i * stride_ + u + 1] =
            prefix_[i * stride_ + u] +
            binomial_i64(d - u + suffix_len - 1, suffix_len);
      }
    }
  }

  std::int64_t count() const { return binomial_i64(d_ + k_ - 1, k_); }

  template <typename It>
  std::int64_t rank(It values) const {
    std::int64_t r = 0;
    int prev = 0;
    const std::int64_t* row = prefix_.data();
    for (int i = 0; i < k_; ++i, row += stride_) {
      const int v = static_cast<int>(values[i]);
      r += row[v] - row[prev];
      prev = v;
    }
    return r;
  }

  int d() const { return d_; }
  int k() const { return k_; }

 private:
  int d_ = 0, k_ = 0, stride_ = 0;
  std::vector<std::int64_t> prefix_;
};

/// All multisets of size k over {0..d-1} in lexicographic order.
inline std::vector<std::vector<std::uint8_t>> enumerate_multisets(int d, int k) {
  std::vector<std::vector<std::uint8_t>> out;
  std::vector<std::uint8_t> cur(k, 0);
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == d - 1) --i;
    if (i < 0) break;
    const std::uint8_t v = cur[i] + 1;
    for (int j = i; j < k; ++j) cur[j] = v;
  }
  return out;
}

/// Number of distinct orderings of a sorted tuple: k! / prod(mult!).
template <typename It>
double orbit_size(It values, int k) {
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  int run = 1;
  for (int i = 1; i < k; ++i) {
    if (values[i] == values[i - 1]) {
      ++run;
      fact /= run;
    } else {
      run = 1;
    }
  }
  return fact;
}

/// Distinct permutations of a sorted tuple, in lexicographic order.
template <typename It>
std::vector<std::array<std::uint8_t, 8>> enumerate_orbit(It values, int k) {
  std::array<std::uint8_t, 8> cur{};
  for (int i = 0; i < k; ++i) cur[i] = static_cast<std::uint8_t>(values[i]);
  std::vector<std::array<std::uint8_t, 8>> orbit;
  do {
    orbit.push_back(cur);
  } while (std::next_permutation(cur.begin(), cur.begin() + k));
  return orbit;
}

/// Entry redistribution factor for the quartic block: the three-case rule on
/// pair-of-pairs indices. Zero kills the diagonal-pair cross terms, and 3/2
/// compensates on the off-diagonal entries that share a value.
inline double shift_factor(int j1, int j2, int j3, int j4) {
  if (j1 == j2 && j1 != j3 && j1 != j4) return 0.0;
  if (j3 == j4 && j3 != j1 && j3 != j2) return 0.0;
  if (j1 != j2 && j3 != j4 &&
      (j1 == j3 || j1 == j4 || j2 == j3 || j2 == j4)) {
    return 1.5;
  }
  return 1.0;
}

/// Canonical key of a pair of sorted 4-tuples under relabeling of values:
/// each value is replaced by its first-occurrence index in the concatenated
/// 8-slot sequence. 8 labels x 4 bits.
inline std::uint32_t pattern_key(const std::uint8_t* a, const std::uint8_t* b) {
  std::uint8_t seen[8];
  int n_seen = 0;
  std::uint32_t key = 0;
  auto label_of = [&](std::uint8_t v) -> std::uint32_t {
    for (int i = 0; i < n_seen; ++i)
      if (seen[i] == v) return static_cast<std::uint32_t>(i);
    seen[n_seen] = v;
    return static_cast<std::uint32_t>(n_seen++);
  };
  for (int i = 0; i < 4; ++i) key = (key << 4) | label_of(a[i]);
  for (int i = 0; i < 4; ++i) key = (key << 4) | label_of(b[i]);
  return key;
}

/// Precomputed sum of shifted-factor products over the orbits of a canonical
/// pattern: F(alpha, beta) = sum over orderings J of alpha and K of beta of
/// shift_factor(J1,J2,K1,K2) * shift_factor(J3,J4,K3,K4).
///
/// The value depends only on the coincidence pattern, so the table covers
/// every pair of sorted 4-tuples over at most 8 distinct values.
class PatternFactorTable {
 public:
  PatternFactorTable() {
    std::unordered_map<std::uint32_t, double> values;
    const auto tuples = enumerate_multisets(8, 4);
    for (const auto& a : tuples) {
      for (const auto& b : tuples) {
        const std::uint32_t key = pattern_key(a.data(), b.data());
        if (values.count(key)) continue;
        values.emplace(key, compute(a, b));
      }
    }
    // Open-addressing table sized for a low load factor; read-only after
    // construction, so lookups are safe from any thread.
    std::size_t size = 64;
    while (size < values.size() * 4) size <<= 1;
    mask_ = size - 1;
    keys_.assign(size, kEmpty);
    factors_.assign(size, 0.0);
    for (const auto& [key, value] : values) {
      std::size_t slot = hash(key);
      while (keys_[slot] != kEmpty) slot = (slot + 1) & mask_;
      keys_[slot] = key;
      factors_[slot] = value;
    }
  }

  double factor(std::uint32_t key) const {
    std::size_t slot = hash(key);
    while (keys_[slot] != key) slot = (slot + 1) & mask_;
    return factors_[slot];
  }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  std::size_t hash(std::uint32_t key) const {
    return (static_cast<std::size_t>(key) * 2654435761u) & mask_;
  }

  static double compute(const std::vector<std::uint8_t>& a,
                        const std::vector<std::uint8_t>& b) {
    const auto orbit_a = enumerate_orbit(a.data(), 4);
    const auto orbit_b = enumerate_orbit(b.data(), 4);
    double sum = 0.0;
    for (const auto& J : orbit_a) {
      for (const auto& K : orbit_b) {
        sum += shift_factor(J[0], J[1], K[0], K[1]) *
               shift_factor(J[2], J[3], K[2], K[3]);
      }
    }
    return sum;
  }

  std::size_t mask_ = 0;
  std::vector<std::uint32_t> keys_;
  std::vector<double> factors_;
};

inline const PatternFactorTable& pattern_factors() {
  static const PatternFactorTable table;
  return table;
}

}  // namespace symbasis
}  // namespace spreadcert
