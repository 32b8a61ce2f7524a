#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "spreadcert/errors.hpp"
#include "spreadcert/multiset_basis.hpp"
#include "spreadcert/parallel.hpp"
#include "spreadcert/scaled.hpp"

namespace spreadcert {
namespace tensorcore {

inline constexpr std::uint64_t kSubsetGuard = 10'000'000;     // C(n,t) cap
inline constexpr std::int64_t kDenseDimGuard = 4096;          // d^{2t} cap
inline constexpr std::int64_t kRestrictedDimGuard = 10'000;   // C(d+2t-1,2t) cap

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline std::int64_t tensor_dim(int d, int order) {
  std::int64_t dim = 1;
  for (int i = 0; i < order; ++i) {
    if (dim > kDenseDimGuard * kDenseDimGuard) break;
    dim *= d;
  }
  return dim;
}

// ---------------------------------------------------------------------------
// Quartic blocks
// ---------------------------------------------------------------------------

/// Dense d^2 x d^2 symmetric block representing the (optionally shifted)
/// fourth tensor power of one row, indexed by index pairs (j1,j2),(j3,j4).
struct QuarticBlock {
  int dim = 0;
  Eigen::MatrixXd entries;
};

/// Shifted quartic block of a single vector. Entries follow the three-case
/// redistribution rule; the quartic form on squared vectors is preserved:
/// (x (x) x)^T B (x (x) x) = <a,x>^4.
inline QuarticBlock quartic_block(const Eigen::VectorXd& a, bool apply_shift) {
  const int d = static_cast<int>(a.size());
  if (d < 1) throw InvalidDimensionError("quartic_block: empty vector");
  QuarticBlock block;
  block.dim = d;
  block.entries.resize(static_cast<std::int64_t>(d) * d,
                       static_cast<std::int64_t>(d) * d);
  // each entry computed once and mirrored, so symmetry holds bit-exactly
  for (std::int64_t row = 0; row < static_cast<std::int64_t>(d) * d; ++row) {
    const int j1 = static_cast<int>(row / d), j2 = static_cast<int>(row % d);
    const double a12 = a[j1] * a[j2];
    for (std::int64_t col = row; col < static_cast<std::int64_t>(d) * d; ++col) {
      const int j3 = static_cast<int>(col / d), j4 = static_cast<int>(col % d);
      const double factor =
          apply_shift ? symbasis::shift_factor(j1, j2, j3, j4) : 1.0;
      const double value = factor * a12 * a[j3] * a[j4];
      block.entries(row, col) = value;
      block.entries(col, row) = value;
    }
  }
  return block;
}

inline QuarticBlock shift_quartic(const Eigen::VectorXd& a) {
  return quartic_block(a, true);
}

// ---------------------------------------------------------------------------
// Symmetrization
// ---------------------------------------------------------------------------

/// Orthogonal projection onto permutation-symmetric tensors: coordinate J is
/// replaced by the mean of y over the distinct rearrangements of J. Orbit
/// sums are shared across indices with equal sorted key.
inline Eigen::VectorXd symmetrize(const Eigen::VectorXd& y, int t, int d) {
  const int order = 2 * t;
  if (t < 1 || order > 6)
    throw DomainError("symmetrize: requires 1 <= t and 2t <= 6");
  const std::int64_t dim = tensor_dim(d, order);
  if (y.size() != dim)
    throw InvalidDimensionError("symmetrize: length != d^(2t)");

  struct OrbitStat {
    double sum = 0.0;
    std::int64_t count = 0;
  };
  std::unordered_map<std::uint64_t, OrbitStat> orbits;
  orbits.reserve(static_cast<std::size_t>(dim));

  std::vector<std::array<std::uint8_t, 6>> digits(dim);
  for (std::int64_t idx = 0; idx < dim; ++idx) {
    std::int64_t rem = idx;
    std::array<std::uint8_t, 6> dg{};
    for (int k = order - 1; k >= 0; --k) {
      dg[k] = static_cast<std::uint8_t>(rem % d);
      rem /= d;
    }
    digits[idx] = dg;
    std::array<std::uint8_t, 6> sorted = dg;
    std::sort(sorted.begin(), sorted.begin() + order);
    std::uint64_t key = 0;
    for (int k = 0; k < order; ++k) key = (key << 8) | sorted[k];
    digits[idx] = sorted;
    auto& stat = orbits[key];
    stat.sum += y[idx];
    stat.count += 1;
  }
  Eigen::VectorXd out(dim);
  for (std::int64_t idx = 0; idx < dim; ++idx) {
    std::uint64_t key = 0;
    for (int k = 0; k < order; ++k) key = (key << 8) | digits[idx][k];
    const auto& stat = orbits[key];
    out[idx] = stat.sum / static_cast<double>(stat.count);
  }
  return out;
}

/// Overload inferring d from the vector length.
inline Eigen::VectorXd symmetrize(const Eigen::VectorXd& y, int t) {
  const int order = 2 * t;
  if (t < 1 || order > 6)
    throw DomainError("symmetrize: requires 1 <= t and 2t <= 6");
  const double root = std::pow(static_cast<double>(y.size()), 1.0 / order);
  const int d = static_cast<int>(std::llround(root));
  if (d < 1 || tensor_dim(d, order) != y.size())
    throw InvalidDimensionError("symmetrize: length is not a perfect 2t-th power");
  return symmetrize(y, t, d);
}

// ---------------------------------------------------------------------------
// Moment operator (matrix-free and dense desk-scale forms)
// ---------------------------------------------------------------------------

namespace detail {

// Iterates size-t subsets of {0..n-1} in lexicographic order.
inline bool next_subset(std::vector<int>& s, int n) {
  const int t = static_cast<int>(s.size());
  int i = t - 1;
  while (i >= 0 && s[i] == n - t + i) --i;
  if (i < 0) return false;
  ++s[i];
  for (int j = i + 1; j < t; ++j) s[j] = s[j - 1] + 1;
  return true;
}

// Applies a d^2 x d^2 block to pair-slot k of a vector with t pair slots.
inline Eigen::VectorXd apply_block_to_slot(const Eigen::MatrixXd& block,
                                           const Eigen::VectorXd& v, int t,
                                           int k, std::int64_t pair_dim) {
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < k; ++i) outer *= pair_dim;
  for (int i = k + 1; i < t; ++i) inner *= pair_dim;
  Eigen::VectorXd out(v.size());
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (std::int64_t o = 0; o < outer; ++o) {
    Eigen::Map<const RowMat> src(v.data() + o * pair_dim * inner, pair_dim,
                                 inner);
    Eigen::Map<RowMat> dst(out.data() + o * pair_dim * inner, pair_dim, inner);
    dst.noalias() = block * src;
  }
  return out;
}

}  // namespace detail

/// Matrix-free symmetrized moment operator at level t: the average over index
/// permutations on both sides of t! * sum over size-t row subsets of the
/// tensor product of their quartic blocks. Immutable after construction.
struct MomentOperator {
  int t = 0;
  int d = 0;
  int n = 0;
  bool include_shift = true;
  std::vector<Eigen::MatrixXd> blocks;  // one d^2 x d^2 block per row
  std::int64_t dim = 0;                 // d^{2t}

  static MomentOperator build(const Eigen::MatrixXd& A, int t,
                              bool include_shift = true) {
    MomentOperator op;
    op.t = t;
    op.d = static_cast<int>(A.cols());
    op.n = static_cast<int>(A.rows());
    op.include_shift = include_shift;
    if (t < 1 || 2 * t > 6)
      throw DomainError("MomentOperator: requires 1 <= t and 2t <= 6");
    if (op.d < 1) throw InvalidDimensionError("MomentOperator: d must be >= 1");
    if (op.n < t) throw InvalidDimensionError("MomentOperator: requires n >= t");
    op.dim = tensor_dim(op.d, 2 * t);
    op.blocks.reserve(op.n);
    for (int i = 0; i < op.n; ++i)
      op.blocks.push_back(
          quartic_block(A.row(i).transpose(), include_shift).entries);
    return op;
  }

  std::uint64_t subset_count() const {
    return static_cast<std::uint64_t>(symbasis::binomial(n, t));
  }

  /// Applies the operator: symmetrize, enumerate subsets blockwise, scale by
  /// t!, symmetrize again.
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const {
    if (y.size() != dim)
      throw InvalidDimensionError("MomentOperator::apply: length != d^(2t)");
    const std::uint64_t subsets = subset_count();
    if (subsets > kSubsetGuard)
      throw ResourceLimitError("MomentOperator::apply: too many subsets",
                               subsets, kSubsetGuard);
    const std::int64_t pair_dim = static_cast<std::int64_t>(d) * d;
    const Eigen::VectorXd inner = symmetrize(y, t, d);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    std::vector<int> subset(t);
    for (int i = 0; i < t; ++i) subset[i] = i;
    do {
      Eigen::VectorXd term = inner;
      for (int k = 0; k < t; ++k)
        term = detail::apply_block_to_slot(blocks[subset[k]], term, t, k,
                                           pair_dim);
      acc += term;
    } while (detail::next_subset(subset, n));
    acc *= factorial(t);
    return symmetrize(acc, t, d);
  }

  /// Dense unsymmetrized moment matrix (increasing-index tensor ordering).
  Eigen::MatrixXd materialize_unsymmetrized() const {
    if (dim > kDenseDimGuard)
      throw ResourceLimitError("MomentOperator: dense dimension too large",
                               static_cast<std::uint64_t>(dim),
                               static_cast<std::uint64_t>(kDenseDimGuard));
    const std::uint64_t subsets = subset_count();
    if (subsets > kSubsetGuard)
      throw ResourceLimitError("MomentOperator: too many subsets", subsets,
                               kSubsetGuard);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<int> subset(t);
    for (int i = 0; i < t; ++i) subset[i] = i;
    do {
      Eigen::MatrixXd K = blocks[subset[0]];
      for (int k = 1; k < t; ++k) {
        const Eigen::MatrixXd& B = blocks[subset[k]];
        Eigen::MatrixXd next(K.rows() * B.rows(), K.cols() * B.cols());
        for (std::int64_t r = 0; r < K.rows(); ++r)
          for (std::int64_t c = 0; c < K.cols(); ++c)
            next.block(r * B.rows(), c * B.cols(), B.rows(), B.cols()) =
                K(r, c) * B;
        K = std::move(next);
      }
      M += K;
    } while (detail::next_subset(subset, n));
    M *= factorial(t);
    return M;
  }

  /// Dense symmetrized operator: conjugation of the moment matrix by the
  /// orthogonal symmetrizer on both sides.
  Eigen::MatrixXd materialize() const {
    Eigen::MatrixXd M = materialize_unsymmetrized();
    for (std::int64_t c = 0; c < dim; ++c) M.col(c) = symmetrize(M.col(c), t, d);
    for (std::int64_t r = 0; r < dim; ++r)
      M.row(r) = symmetrize(M.row(r).transpose(), t, d).transpose();
    return M;
  }
};

// ---------------------------------------------------------------------------
// Moment tables and the restricted operator
// ---------------------------------------------------------------------------

/// table[rank(multiset)] = sum over rows i of prod_{v in multiset} A(i, v),
/// for all multisets of size k over the column indices, in rank order.
/// Shared prefixes are reused along a depth-first walk.
inline std::vector<double> moment_table(const Eigen::MatrixXd& A, int k) {
  const int d = static_cast<int>(A.cols());
  const int n = static_cast<int>(A.rows());
  symbasis::MultisetIndexer indexer(d, k);
  std::vector<double> table(static_cast<std::size_t>(indexer.count()), 0.0);

  auto run_range = [&](int first_lo, int first_hi) {
    std::vector<Eigen::ArrayXd> prefix(k + 1);
    prefix[0] = Eigen::ArrayXd::Ones(n);
    std::vector<std::uint8_t> tuple(k, 0);
    std::int64_t write = 0;
    auto rec = [&](auto&& self, int depth, int min_val) -> void {
      for (int v = min_val; v < d; ++v) {
        tuple[depth] = static_cast<std::uint8_t>(v);
        prefix[depth + 1] = prefix[depth] * A.col(v).array();
        if (depth + 1 == k) {
          table[static_cast<std::size_t>(write++)] = prefix[depth + 1].sum();
        } else {
          self(self, depth + 1, v);
        }
      }
    };
    for (int v0 = first_lo; v0 < first_hi; ++v0) {
      tuple[0] = static_cast<std::uint8_t>(v0);
      std::vector<std::uint8_t> start(k, static_cast<std::uint8_t>(v0));
      write = indexer.rank(start.data());
      prefix[1] = prefix[0] * A.col(v0).array();
      if (k == 1) {
        table[static_cast<std::size_t>(write)] = prefix[1].sum();
      } else {
        rec(rec, 1, v0);
      }
    }
  };

  const int workers = std::min(worker_count(), d);
  if (workers <= 1 || d < 4) {
    run_range(0, d);
  } else {
    // First-value blocks write disjoint contiguous rank ranges.
    std::vector<std::thread> threads;
    const int chunk = (d + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk, hi = std::min(d, lo + chunk);
      if (lo >= hi) break;
      threads.emplace_back([&run_range, lo, hi] { run_range(lo, hi); });
    }
    for (auto& th : threads) th.join();
  }
  return table;
}

inline std::int64_t restricted_dim(int d, int t) {
  return symbasis::binomial_i64(d + 2 * t - 1, 2 * t);
}

namespace detail {

inline int pair_rank(int i, int j, int d) {
  // lexicographic rank of the sorted pair (i <= j) among 2-multisets
  return i * d - i * (i - 1) / 2 + (j - i);
}

inline Eigen::MatrixXd restricted_level1(const Eigen::MatrixXd& A,
                                         bool include_shift) {
  const int d = static_cast<int>(A.cols());
  const int m2 = d * (d + 1) / 2;
  symbasis::MultisetIndexer idx4(d, 4);
  const std::vector<double> M4 = moment_table(A, 4);

  const auto pairs = symbasis::enumerate_multisets(d, 2);
  Eigen::MatrixXd T(m2, m2);
  parallel_for(0, m2, [&](std::int64_t b) {
    const int p = pairs[b][0], q = pairs[b][1];
    const double cb = (p == q) ? 1.0 : 2.0;
    for (int g = 0; g <= b; ++g) {
      const int r = pairs[g][0], s = pairs[g][1];
      const double cg = (r == s) ? 1.0 : 2.0;
      const double f =
          include_shift ? symbasis::shift_factor(p, q, r, s) : 1.0;
      double value = 0.0;
      if (f != 0.0) {
        std::array<std::uint8_t, 4> merged = {
            static_cast<std::uint8_t>(p), static_cast<std::uint8_t>(q),
            static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(s)};
        std::sort(merged.begin(), merged.end());
        value = std::sqrt(cb * cg) * f *
                M4[static_cast<std::size_t>(idx4.rank(merged.data()))];
      }
      T(b, g) = value;
      T(g, b) = value;
    }
  });
  return T;
}

inline Eigen::MatrixXd restricted_level2(const Eigen::MatrixXd& A,
                                         bool include_shift) {
  const int d = static_cast<int>(A.cols());
  const int m2 = d * (d + 1) / 2;
  symbasis::MultisetIndexer idx4(d, 4), idx8(d, 8);
  const std::int64_t m = idx4.count();
  const std::vector<double> M4 = moment_table(A, 4);
  const std::vector<double> M8 = moment_table(A, 8);
  const auto pairs = symbasis::enumerate_multisets(d, 2);
  const auto quads = symbasis::enumerate_multisets(d, 4);

  // Pair-restricted aggregate block: one d(d+1)/2-dimensional matrix whose
  // quadratic form matches the row-summed quartic block on pair-symmetric
  // vectors.
  Eigen::MatrixXd S2(m2, m2);
  for (int b = 0; b < m2; ++b) {
    const int p = pairs[b][0], q = pairs[b][1];
    const double cb = (p == q) ? 1.0 : 2.0;
    for (int g = 0; g <= b; ++g) {
      const int r = pairs[g][0], s = pairs[g][1];
      const double cg = (r == s) ? 1.0 : 2.0;
      const double f =
          include_shift ? symbasis::shift_factor(p, q, r, s) : 1.0;
      double value = 0.0;
      if (f != 0.0) {
        std::array<std::uint8_t, 4> merged = {
            static_cast<std::uint8_t>(p), static_cast<std::uint8_t>(q),
            static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(s)};
        std::sort(merged.begin(), merged.end());
        value = std::sqrt(cb * cg) * f *
                M4[static_cast<std::size_t>(idx4.rank(merged.data()))];
      }
      S2(b, g) = value;
      S2(g, b) = value;
    }
  }

  // Per-multiset data: orbit size and the decomposition into ordered
  // pair-multiset splits with overlap coefficients.
  struct SplitEntry {
    std::uint16_t b1, b2;
    double coef;  // count / sqrt(c_b1 * c_b2 * c_alpha)
  };
  std::vector<double> orbit(m);
  std::vector<std::vector<SplitEntry>> splits(m);
  for (std::int64_t alpha = 0; alpha < m; ++alpha) {
    const auto& vals = quads[alpha];
    orbit[alpha] = symbasis::orbit_size(vals.data(), 4);
    std::unordered_map<std::uint32_t, int> counts;
    for (const auto& J : symbasis::enumerate_orbit(vals.data(), 4)) {
      const int b1 = pair_rank(std::min(J[0], J[1]), std::max(J[0], J[1]), d);
      const int b2 = pair_rank(std::min(J[2], J[3]), std::max(J[2], J[3]), d);
      counts[static_cast<std::uint32_t>(b1) << 16 |
             static_cast<std::uint32_t>(b2)] += 1;
    }
    auto& list = splits[alpha];
    list.reserve(counts.size());
    for (const auto& [packed, count] : counts) {
      SplitEntry e;
      e.b1 = static_cast<std::uint16_t>(packed >> 16);
      e.b2 = static_cast<std::uint16_t>(packed & 0xffff);
      const double cb1 = (pairs[e.b1][0] == pairs[e.b1][1]) ? 1.0 : 2.0;
      const double cb2 = (pairs[e.b2][0] == pairs[e.b2][1]) ? 1.0 : 2.0;
      e.coef = count / std::sqrt(cb1 * cb2 * orbit[alpha]);
      list.push_back(e);
    }
    // column-major gather order in the scan below
    std::sort(list.begin(), list.end(), [](const SplitEntry& x, const SplitEntry& y) {
      return x.b2 != y.b2 ? x.b2 < y.b2 : x.b1 < y.b1;
    });
  }

  Eigen::MatrixXd T(m, m);

  // Flattened split arrays for a tight scan loop.
  std::vector<std::int32_t> scan_offset(m + 1, 0);
  for (std::int64_t alpha = 0; alpha < m; ++alpha)
    scan_offset[alpha + 1] =
        scan_offset[alpha] + static_cast<std::int32_t>(splits[alpha].size());
  std::vector<std::int32_t> scan_index(scan_offset[m]);
  std::vector<double> scan_coef(scan_offset[m]);
  for (std::int64_t alpha = 0; alpha < m; ++alpha) {
    std::int32_t pos = scan_offset[alpha];
    for (const auto& e : splits[alpha]) {
      scan_index[pos] = static_cast<std::int32_t>(e.b1) +
                        static_cast<std::int32_t>(e.b2) * m2;
      scan_coef[pos] = e.coef;
      ++pos;
    }
  }

  // Cross-subset part: restriction of the aggregate tensor square, assembled
  // column by column through the pair-split expansion. Only the upper
  // triangle is filled here; a mirror pass runs at the end.
  const int max_workers = worker_count();
  parallel_for(0, max_workers, [&](std::int64_t w) {
    const std::int64_t chunk = (m + max_workers - 1) / max_workers;
    const std::int64_t lo = w * chunk, hi = std::min<std::int64_t>(m, lo + chunk);
    Eigen::MatrixXd M_alpha(m2, m2);
    Eigen::MatrixXd left(m2, 8), right(m2, 8);
    for (std::int64_t alpha = lo; alpha < hi; ++alpha) {
      const auto& list = splits[alpha];
      const int k = static_cast<int>(list.size());
      for (int i = 0; i < k; ++i) {
        left.col(i) = list[i].coef * S2.col(list[i].b1);
        right.col(i) = S2.col(list[i].b2);
      }
      // rank-k update by columns; stays single-threaded inside the worker
      for (int c = 0; c < m2; ++c) {
        auto dst = M_alpha.col(c);
        dst = right(c, 0) * left.col(0);
        for (int i = 1; i < k; ++i) dst += right(c, i) * left.col(i);
      }
      const double* flat = M_alpha.data();
      double* out = T.data() + alpha * m;
      for (std::int64_t row = 0; row <= alpha; ++row) {
        double acc = 0.0;
        for (std::int32_t p = scan_offset[row]; p < scan_offset[row + 1]; ++p)
          acc += scan_coef[p] * flat[scan_index[p]];
        out[row] = acc;
      }
    }
  });

  // Same-row correction: subtract the diagonal i = j contribution, which
  // factors into an eighth-moment lookup times a pattern constant.
  const auto& patterns = symbasis::pattern_factors();
  parallel_for(0, m, [&](std::int64_t row) {
    const auto& va = quads[row];
    for (std::int64_t beta = row; beta < m; ++beta) {
      const auto& vb = quads[beta];
      std::array<std::uint8_t, 8> merged{};
      std::merge(va.begin(), va.end(), vb.begin(), vb.end(), merged.begin());
      const double mu8 = M8[static_cast<std::size_t>(idx8.rank(merged.data()))];
      double F;
      if (include_shift) {
        F = patterns.factor(symbasis::pattern_key(va.data(), vb.data()));
      } else {
        F = orbit[row] * orbit[beta];
      }
      T(row, beta) -= mu8 * F / std::sqrt(orbit[row] * orbit[beta]);
    }
  });

  // Mirror the upper triangle; tiles keep both sides cache-resident.
  const std::int64_t tile = 256;
  parallel_for(0, (m + tile - 1) / tile, [&](std::int64_t jt) {
    const std::int64_t j0 = jt * tile, j1 = std::min(m, j0 + tile);
    for (std::int64_t i0 = j0; i0 < m; i0 += tile) {
      const std::int64_t i1 = std::min(m, i0 + tile);
      for (std::int64_t j = j0; j < j1; ++j)
        for (std::int64_t i = std::max(i0, j + 1); i < i1; ++i) T(i, j) = T(j, i);
    }
  });

  return T;
}

}  // namespace detail

/// Restriction of the symmetrized moment operator to the permutation-
/// symmetric subspace, in the orthonormal symmetrized-monomial basis
/// (multisets of size 2t in rank order). The operator annihilates the
/// orthogonal complement, so this m x m matrix carries its entire nonzero
/// spectrum and all traces of powers.
inline Eigen::MatrixXd restricted_moment_matrix(const Eigen::MatrixXd& A, int t,
                                                bool include_shift = true) {
  const int d = static_cast<int>(A.cols());
  const int n = static_cast<int>(A.rows());
  if (t < 1 || 2 * t > 6)
    throw DomainError("restricted_moment_matrix: requires 1 <= t and 2t <= 6");
  if (d < 1 || n < t)
    throw InvalidDimensionError("restricted_moment_matrix: bad dimensions");
  const std::int64_t m = restricted_dim(d, t);
  if (m > kRestrictedDimGuard)
    throw ResourceLimitError("restricted_moment_matrix: basis too large",
                             static_cast<std::uint64_t>(m),
                             static_cast<std::uint64_t>(kRestrictedDimGuard));
  if (t == 1) return detail::restricted_level1(A, include_shift);
  if (t == 2) return detail::restricted_level2(A, include_shift);

  // 2t = 6: desk scale only; project the dense operator onto the basis.
  MomentOperator op = MomentOperator::build(A, t, include_shift);
  const Eigen::MatrixXd dense = op.materialize();
  const auto reps = symbasis::enumerate_multisets(d, 2 * t);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(op.dim, m);
  for (std::int64_t alpha = 0; alpha < m; ++alpha) {
    const auto orbit = symbasis::enumerate_orbit(reps[alpha].data(), 2 * t);
    const double weight = 1.0 / std::sqrt(static_cast<double>(orbit.size()));
    for (const auto& J : orbit) {
      std::int64_t flat = 0;
      for (int k = 0; k < 2 * t; ++k) flat = flat * d + J[k];
      basis(flat, alpha) = weight;
    }
  }
  return basis.transpose() * dense * basis;
}

/// Coordinates of x^{(x) 2t} in the symmetrized-monomial basis:
/// w[alpha] = sqrt(orbit size) * prod of x over the multiset.
inline Eigen::VectorXd symmetric_coordinates(const Eigen::VectorXd& x, int t) {
  const int d = static_cast<int>(x.size());
  const auto reps = symbasis::enumerate_multisets(d, 2 * t);
  Eigen::VectorXd w(static_cast<std::int64_t>(reps.size()));
  for (std::size_t alpha = 0; alpha < reps.size(); ++alpha) {
    double prod = 1.0;
    for (int k = 0; k < 2 * t; ++k) prod *= x[reps[alpha][k]];
    w[static_cast<std::int64_t>(alpha)] =
        std::sqrt(symbasis::orbit_size(reps[alpha].data(), 2 * t)) * prod;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Elementary symmetric polynomials (scaled arithmetic)
// ---------------------------------------------------------------------------

/// e_t(z) for nonnegative z via the one-dimensional recurrence
/// e[j] += z_i * e[j-1] (descending j), in the scaled representation.
/// e_0 = 1 and e_t = 0 for t > n.
inline ScaledValue elem_sym(const Eigen::VectorXd& z, int t) {
  const int n = static_cast<int>(z.size());
  if (t < 0) throw DomainError("elem_sym: negative order");
  for (int i = 0; i < n; ++i)
    if (z[i] < 0.0) throw DomainError("elem_sym: negative entry");
  if (t > n) return ScaledValue();
  std::vector<ScaledValue> e(static_cast<std::size_t>(t) + 1);
  e[0] = ScaledValue::from_double(1.0);
  for (int i = 0; i < n; ++i) {
    const ScaledValue zi = ScaledValue::from_double(z[i]);
    const int top = std::min(t, i + 1);
    for (int j = top; j >= 1; --j) e[j] += zi * e[j - 1];
  }
  return e[static_cast<std::size_t>(t)];
}

/// Value and all partial derivatives of e_t. The partial with respect to z_i
/// equals e_{t-1} of z with entry i removed, assembled from prefix/suffix
/// elementary-symmetric arrays in O(n t). Partials share one exponent.
struct ElemSymGrad {
  ScaledValue value;
  Eigen::VectorXd partial_mantissa;
  std::int64_t partial_exp2 = 0;
};

inline ElemSymGrad elem_sym_grad(const Eigen::VectorXd& z, int t) {
  const int n = static_cast<int>(z.size());
  if (t < 1) throw DomainError("elem_sym_grad: order must be >= 1");
  for (int i = 0; i < n; ++i)
    if (z[i] < 0.0) throw DomainError("elem_sym_grad: negative entry");

  ElemSymGrad out;
  out.partial_mantissa = Eigen::VectorXd::Zero(n);
  out.partial_exp2 = 0;
  if (t > n) return out;  // value 0, all partials 0

  if (t == 1) {
    out.value = elem_sym(z, 1);
    out.partial_mantissa = Eigen::VectorXd::Ones(n);
    return out;
  }

  // prefix[i][j] = e_j(z_0..z_{i-1}); suffix[i][j] = e_j(z_i..z_{n-1}).
  const int cols = t;  // orders 0..t-1 are all the gradient needs
  std::vector<std::vector<ScaledValue>> prefix(n + 1),
      suffix(n + 1);
  prefix[0].assign(cols, ScaledValue());
  prefix[0][0] = ScaledValue::from_double(1.0);
  for (int i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i];
    const ScaledValue zi = ScaledValue::from_double(z[i]);
    for (int j = std::min(cols - 1, i + 1); j >= 1; --j)
      prefix[i + 1][j] += zi * prefix[i + 1][j - 1];
  }
  suffix[n].assign(cols, ScaledValue());
  suffix[n][0] = ScaledValue::from_double(1.0);
  for (int i = n - 1; i >= 0; --i) {
    suffix[i] = suffix[i + 1];
    const ScaledValue zi = ScaledValue::from_double(z[i]);
    for (int j = std::min(cols - 1, n - i); j >= 1; --j)
      suffix[i][j] += zi * suffix[i][j - 1];
  }

  std::vector<ScaledValue> partials(n);
  std::int64_t max_exp = std::numeric_limits<std::int64_t>::min();
  for (int i = 0; i < n; ++i) {
    ScaledValue p;
    for (int j = 0; j < t; ++j) p += prefix[i][j] * suffix[i + 1][t - 1 - j];
    partials[i] = p;
    if (!p.is_zero()) max_exp = std::max(max_exp, p.exp2);
  }
  out.value = elem_sym(z, t);
  if (max_exp == std::numeric_limits<std::int64_t>::min()) return out;
  out.partial_exp2 = max_exp;
  for (int i = 0; i < n; ++i) {
    if (partials[i].is_zero()) continue;
    const std::int64_t shift = partials[i].exp2 - max_exp;
    out.partial_mantissa[i] =
        shift < -1074 ? 0.0
                      : std::ldexp(partials[i].mantissa, static_cast<int>(shift));
  }
  return out;
}

/// P_t(x): t! times the t-th elementary symmetric polynomial of the fourth
/// powers of the row inner products.
inline ScaledValue eval_Pt(const Eigen::MatrixXd& A, int t,
                           const Eigen::VectorXd& x) {
  if (t < 1) throw DomainError("eval_Pt: order must be >= 1");
  if (A.cols() != x.size())
    throw InvalidDimensionError("eval_Pt: dimension mismatch");
  const Eigen::VectorXd c = A * x;
  const Eigen::VectorXd z = c.array().square().square();
  return elem_sym(z, t) * factorial(t);
}

}  // namespace tensorcore
}  // namespace spreadcert
