#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spreadcert/errors.hpp"
#include "spreadcert/recovery.hpp"
#include "spreadcert/rng.hpp"
#include "spreadcert/scaled.hpp"
#include "spreadcert/spectral.hpp"
#include "spreadcert/tensorcore.hpp"

namespace spreadcert {
namespace oracle {

inline constexpr std::uint64_t kBruteGuard = 1'000'000;
inline constexpr std::uint64_t kTagProbe = 0x50524f42;
inline constexpr std::uint64_t kTagReplicate = 0x5245504c;
inline constexpr std::uint64_t kTagAblation = 0x41424c54;

inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t tag,
                                    int replicate) {
  std::uint64_t sm = seed ^ tag ^
                     (0x9e3779b97f4a7c15ULL *
                      (static_cast<std::uint64_t>(replicate) + 1));
  return splitmix64(sm);
}

// ---------------------------------------------------------------------------
// Angular-net distortion estimate (d <= 3)
// ---------------------------------------------------------------------------

/// Two-sided estimate of the subspace distortion sup sqrt(n)||Ax||_2/||Ax||_1
/// from a deterministic angular net. The net maximum is an exact lower bound;
/// a Lipschitz slack over the covering radius turns it into an upper bound,
/// clipped at the universal sqrt(n) ceiling.
struct NetDistortion {
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t points = 0;
  double resolution = 0.0;
  double lipschitz = 0.0;
  double min_l1 = 0.0;
};

inline NetDistortion net_distortion(const Eigen::MatrixXd& A,
                                    double angular_resolution) {
  const int n = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  if (n < 1 || d < 1) throw InvalidDimensionError("net_distortion: empty matrix");
  if (d > 3)
    throw ResourceLimitError("net_distortion: net size explodes beyond d = 3",
                             static_cast<std::uint64_t>(d), 3);
  if (!(angular_resolution > 0.0 && angular_resolution < 1.0))
    throw DomainError("net_distortion: resolution outside (0,1)");

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  NetDistortion out;
  out.resolution = angular_resolution;

  if (d == 1) {
    const double l2 = A.col(0).norm();
    const double l1 = A.col(0).lpNorm<1>();
    if (l1 == 0.0) throw DomainError("net_distortion: zero matrix");
    out.lower = out.upper = sqrt_n * l2 / l1;
    out.points = 1;
    out.min_l1 = l1;
    return out;
  }

  double best = 0.0;
  double min_l1 = std::numeric_limits<double>::infinity();
  std::uint64_t points = 0;
  auto visit = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd y = A * x;
    const double l1 = y.lpNorm<1>();
    if (l1 <= 0.0) return;  // outside span-degenerate directions
    min_l1 = std::min(min_l1, l1);
    best = std::max(best, sqrt_n * y.norm() / l1);
    ++points;
  };

  if (d == 2) {
    const auto steps =
        static_cast<std::int64_t>(std::ceil(M_PI / angular_resolution));
    for (std::int64_t k = 0; k < steps; ++k) {
      const double theta = (k + 0.5) * M_PI / steps;
      Eigen::VectorXd x(2);
      x << std::cos(theta), std::sin(theta);
      visit(x);
    }
  } else {
    const auto lat_steps =
        static_cast<std::int64_t>(std::ceil(M_PI / angular_resolution));
    for (std::int64_t i = 0; i < lat_steps; ++i) {
      const double theta = (i + 0.5) * M_PI / lat_steps;
      const double s = std::sin(theta);
      const auto lon_steps = static_cast<std::int64_t>(
          std::ceil(2.0 * M_PI * std::max(s, 1e-12) / angular_resolution));
      for (std::int64_t j = 0; j < lon_steps; ++j) {
        const double phi = (j + 0.5) * 2.0 * M_PI / lon_steps;
        Eigen::VectorXd x(3);
        x << s * std::cos(phi), s * std::sin(phi), std::cos(theta);
        visit(x);
      }
    }
  }

  out.lower = best;
  out.points = points;
  out.min_l1 = min_l1;

  // Covering radius of the net in chordal distance, with margin.
  const double r_cov = 0.75 * angular_resolution;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const double sigma_max = svd.singularValues()[0];
  const double h_min = min_l1 - sqrt_n * sigma_max * r_cov;
  if (h_min > 0.0) {
    const double lipschitz =
        sqrt_n * (sigma_max / h_min) * (1.0 + sigma_max * sqrt_n / h_min);
    out.lipschitz = lipschitz;
    out.upper = std::min(best + lipschitz * r_cov, sqrt_n);
  } else {
    out.lipschitz = std::numeric_limits<double>::infinity();
    out.upper = sqrt_n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probe-based lower bound on max P_t
// ---------------------------------------------------------------------------

struct ProbeMax {
  ScaledValue value;
  Eigen::VectorXd argmax;
  int refinements = 0;
};

/// Lower bound on the sphere maximum of P_t: the best of the first standard
/// basis direction, seeded random unit probes, and ascent refinements of the
/// leading probes. Always a lower bound on the true maximum.
inline ProbeMax probe_max_quartic(const Eigen::MatrixXd& A, int t,
                                  int num_probes, std::uint64_t seed) {
  if (num_probes < 1) throw DomainError("probe_max_quartic: num_probes >= 1");
  const int d = static_cast<int>(A.cols());
  ProbeMax out;

  std::vector<std::pair<ScaledValue, Eigen::VectorXd>> leaders;
  auto consider = [&](const Eigen::VectorXd& x) {
    const ScaledValue value = tensorcore::eval_Pt(A, t, x);
    if (out.argmax.size() == 0 || value > out.value) {
      out.value = value;
      out.argmax = x;
    }
    leaders.emplace_back(value, x);
    std::sort(leaders.begin(), leaders.end(),
              [](const auto& a, const auto& b) { return b.first < a.first; });
    if (leaders.size() > 4) leaders.pop_back();
  };

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d);
  e1[0] = 1.0;
  consider(e1);
  RngStream stream = derive_stream(seed, kTagProbe);
  for (int p = 1; p < num_probes; ++p) consider(stream.unit_vector(d));

  recovery::AscentParams params;
  params.max_steps = 200;
  params.gradient_tolerance = 1e-9;
  const auto snapshot = leaders;
  for (const auto& [value, x] : snapshot) {
    const Eigen::VectorXd refined = recovery::ascend(A, t, x, params);
    const ScaledValue refined_value = tensorcore::eval_Pt(A, t, refined);
    if (refined_value > out.value) {
      out.value = refined_value;
      out.argmax = refined;
    }
    ++out.refinements;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force P_t
// ---------------------------------------------------------------------------

/// Direct subset enumeration of t! sum over |S|=t of prod <a_i,x>^4. This is
/// the reference the fast evaluation path is validated against.
inline ScaledValue brute_Pt(const Eigen::MatrixXd& A, int t,
                            const Eigen::VectorXd& x) {
  const int n = static_cast<int>(A.rows());
  if (t < 1) throw DomainError("brute_Pt: t must be >= 1");
  if (A.cols() != x.size())
    throw InvalidDimensionError("brute_Pt: dimension mismatch");
  if (t > n) return ScaledValue();
  const double count = symbasis::binomial(n, t);
  if (count > static_cast<double>(kBruteGuard))
    throw ResourceLimitError("brute_Pt: too many subsets",
                             static_cast<std::uint64_t>(count), kBruteGuard);
  const Eigen::VectorXd c = A * x;
  const Eigen::VectorXd z = c.array().square().square();

  ScaledValue total;
  std::vector<int> subset(t);
  for (int i = 0; i < t; ++i) subset[i] = i;
  do {
    ScaledValue prod = ScaledValue::from_double(1.0);
    for (int k = 0; k < t; ++k) prod *= ScaledValue::from_double(z[subset[k]]);
    total += prod;
  } while (tensorcore::detail::next_subset(subset, n));
  return total * tensorcore::factorial(t);
}

// ---------------------------------------------------------------------------
// Monte Carlo trace moments
// ---------------------------------------------------------------------------

enum class Ensemble {
  kGaussian,  // i.i.d. N(0,1)
  kClipped,   // N(0,1) clipped at +/- sqrt(4 ln n): bounded-entry hypothesis
};

struct TraceStats {
  int n = 0, d = 0, t = 0, ell = 0, replicates = 0;
  double mu4 = 3.0;
  ScaledValue mean_trace;
  double normalized_rate = 0.0;  // (mean/d^{2t})^{1/(t ell)}
  double reference = 0.0;        // mu4 n + (d^2/t) ln^2 n
  double ratio = 0.0;            // normalized_rate / reference
  std::vector<ScaledValue> per_replicate;
};

inline Eigen::MatrixXd sample_ensemble(int n, int d, Ensemble ensemble,
                                       std::uint64_t seed) {
  Eigen::MatrixXd A = randmodels::sample_gaussian(n, d, 1.0, seed);
  if (ensemble == Ensemble::kClipped) {
    const double cap = std::sqrt(4.0 * std::log(static_cast<double>(n)));
    A = A.cwiseMax(-cap).cwiseMin(cap);
  }
  return A;
}

/// Monte Carlo estimate of E tr(M^ell) for the symmetrized moment operator,
/// with exact per-replicate traces. Several even exponents can share the
/// same replicate matrices.
inline std::vector<TraceStats> mc_trace_multi(int n, int d, int t,
                                              const std::vector<int>& ells,
                                              int replicates, Ensemble ensemble,
                                              std::uint64_t seed) {
  if (replicates < 1) throw DomainError("mc_trace: replicates must be >= 1");
  for (int ell : ells)
    if (ell < 2 || ell % 2 != 0)
      throw DomainError("mc_trace: ell must be even and >= 2");

  std::vector<std::vector<ScaledValue>> traces(
      ells.size(), std::vector<ScaledValue>(replicates));
  for (int r = 0; r < replicates; ++r) {
    const std::uint64_t rep_seed = replicate_seed(seed, kTagReplicate, r);
    const Eigen::MatrixXd A = sample_ensemble(n, d, ensemble, rep_seed);
    const Eigen::MatrixXd T = tensorcore::restricted_moment_matrix(A, t, true);
    for (std::size_t k = 0; k < ells.size(); ++k)
      traces[k][r] = spectral::trace_power(T, ells[k]);
  }

  std::vector<TraceStats> out;
  for (std::size_t k = 0; k < ells.size(); ++k) {
    TraceStats stats;
    stats.n = n;
    stats.d = d;
    stats.t = t;
    stats.ell = ells[k];
    stats.replicates = replicates;
    stats.mu4 = 3.0;
    ScaledValue sum;
    for (const auto& tr : traces[k]) sum += tr;
    stats.mean_trace = sum * (1.0 / replicates);
    stats.per_replicate = traces[k];
    const ScaledValue dim_scale =
        ScaledValue::from_double(static_cast<double>(d)).pow_int(2 * t);
    stats.normalized_rate =
        (stats.mean_trace / dim_scale).root(t * stats.ell).to_double();
    const double log_n = std::log(static_cast<double>(n));
    stats.reference = stats.mu4 * n +
                      static_cast<double>(d) * d / t * log_n * log_n;
    stats.ratio = stats.normalized_rate / stats.reference;
    out.push_back(std::move(stats));
  }
  return out;
}

inline TraceStats mc_trace(int n, int d, int t, int ell, int replicates,
                           Ensemble ensemble, std::uint64_t seed) {
  return mc_trace_multi(n, d, t, {ell}, replicates, ensemble, seed).front();
}

// ---------------------------------------------------------------------------
// Shift ablation
// ---------------------------------------------------------------------------

/// Spectral-norm ratio of the unshifted to the shifted operator under the
/// identical code path, per replicate. The unshifted operator retains the
/// large aligned component that the entry redistribution removes.
struct AblationStats {
  int n = 0, d = 0, t = 0, replicates = 0;
  std::vector<double> ratios;
  std::vector<double> norm_shifted;
  std::vector<double> norm_unshifted;
  double median_ratio = 0.0;
};

inline AblationStats shift_ablation(int n, int d, int t, int replicates,
                                    std::uint64_t seed) {
  if (replicates < 1) throw DomainError("shift_ablation: replicates must be >= 1");
  AblationStats stats;
  stats.n = n;
  stats.d = d;
  stats.t = t;
  stats.replicates = replicates;
  for (int r = 0; r < replicates; ++r) {
    const std::uint64_t rep_seed = replicate_seed(seed, kTagAblation, r);
    const Eigen::MatrixXd A = randmodels::sample_gaussian(n, d, 1.0, rep_seed);
    const double shifted = spectral::spectral_norm(
        tensorcore::restricted_moment_matrix(A, t, true));
    const double unshifted = spectral::spectral_norm(
        tensorcore::restricted_moment_matrix(A, t, false));
    stats.norm_shifted.push_back(shifted);
    stats.norm_unshifted.push_back(unshifted);
    stats.ratios.push_back(unshifted / shifted);
  }
  std::vector<double> sorted = stats.ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  stats.median_ratio = sorted.size() % 2 == 1
                           ? sorted[mid]
                           : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return stats;
}

}  // namespace oracle
}  // namespace spreadcert
