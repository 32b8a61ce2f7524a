#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spreadcert/errors.hpp"
#include "spreadcert/multiset_basis.hpp"
#include "spreadcert/scaled.hpp"
#include "spreadcert/spectral.hpp"
#include "spreadcert/tensorcore.hpp"

namespace spreadcert {
namespace certifier {

inline constexpr std::uint64_t kScanGuard = 10'000'000;

/// Result of the exhaustive row-subset singular value scan. tau = s_star^2/t
/// bounds <a_i, x>^2 for every unit x and every row outside the top-t set:
/// the (t+1)-th largest squared inner product is at most the top-t average.
struct SubsetScanReport {
  int t = 0;
  double s_star = 0.0;
  double tau = 0.0;
  std::uint64_t subsets_checked = 0;
  std::vector<int> argmax_subset;
};

inline SubsetScanReport scan_subsets(const Eigen::MatrixXd& A, int t) {
  const int n = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  if (t < 1) throw DomainError("scan_subsets: t must be >= 1");
  if (t > d) throw DomainError("scan_subsets: t must not exceed d");
  if (t > n) throw InvalidDimensionError("scan_subsets: t exceeds row count");
  const double count = symbasis::binomial(n, t);
  if (count > static_cast<double>(kScanGuard))
    throw ResourceLimitError("scan_subsets: too many subsets",
                             static_cast<std::uint64_t>(count), kScanGuard);

  SubsetScanReport report;
  report.t = t;
  std::vector<int> subset(t);
  for (int i = 0; i < t; ++i) subset[i] = i;
  double best = -1.0;
  std::vector<int> best_subset = subset;
  std::uint64_t checked = 0;
  Eigen::MatrixXd gram(t, t);
  do {
    ++checked;
    double lambda = 0.0;
    if (t == 1) {
      lambda = A.row(subset[0]).squaredNorm();
    } else if (t == 2) {
      const double g11 = A.row(subset[0]).squaredNorm();
      const double g22 = A.row(subset[1]).squaredNorm();
      const double g12 = A.row(subset[0]).dot(A.row(subset[1]));
      const double half_diff = 0.5 * (g11 - g22);
      lambda = 0.5 * (g11 + g22) +
               std::sqrt(half_diff * half_diff + g12 * g12);
    } else {
      for (int i = 0; i < t; ++i)
        for (int j = 0; j <= i; ++j) {
          gram(i, j) = A.row(subset[i]).dot(A.row(subset[j]));
          gram(j, i) = gram(i, j);
        }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
          gram, Eigen::EigenvaluesOnly);
      lambda = solver.eigenvalues()[t - 1];
    }
    if (lambda > best) {
      best = lambda;
      best_subset = subset;
    }
  } while (tensorcore::detail::next_subset(subset, n));

  report.s_star = std::sqrt(std::max(best, 0.0));
  report.tau = best / t;
  report.subsets_checked = checked;
  report.argmax_subset = best_subset;
  return report;
}

/// Certified upper bound on max over unit x of P_s(x): the top eigenvalue of
/// the restricted symmetrized moment operator plus the verified residual of
/// the computed eigenpair. The trace root tr(T^ell)^(1/ell) is recorded as a
/// cross-check; for even ell it must dominate the top eigenvalue.
struct MomentNormBound {
  int s = 0;
  double lambda_max = 0.0;
  double residual = 0.0;
  ScaledValue bound;
  int trace_ell = 4;
  ScaledValue trace_root;
  std::int64_t restricted_dim = 0;
};

inline MomentNormBound certify_moment_norm(const Eigen::MatrixXd& A, int s,
                                           bool include_shift = true,
                                           int trace_ell = 4) {
  if (trace_ell < 2 || trace_ell % 2 != 0)
    throw DomainError("certify_moment_norm: trace exponent must be even");
  const Eigen::MatrixXd T =
      tensorcore::restricted_moment_matrix(A, s, include_shift);
  const auto top = spectral::top_eigenpair(T);
  MomentNormBound out;
  out.s = s;
  out.lambda_max = top.lambda;
  out.residual = top.residual;
  out.bound = ScaledValue::from_double(std::max(top.lambda, 0.0) + top.residual);
  out.trace_ell = trace_ell;
  out.trace_root = spectral::trace_power(T, trace_ell).root(trace_ell);
  out.restricted_dim = T.rows();
  return out;
}

/// Stars-and-bars combination of the per-level bounds: a certified bound on
/// (sum over rows outside the top-t set of <a_i,x>^4)^t is
///   sum_{s=1..t} (t!/s!) C(t-1, t-s) tau^{2(t-s)} bound_s,
/// whose t-th root divided by n gives B.
inline ScaledValue combine_quartic_bound(int t, double tau, int n,
                                         const std::vector<ScaledValue>& per_s_bounds) {
  if (t < 1) throw DomainError("combine_quartic_bound: t must be >= 1");
  if (static_cast<int>(per_s_bounds.size()) != t)
    throw InvalidDimensionError(
        "combine_quartic_bound: needs one bound per level s = 1..t");
  if (!(tau > 0.0)) throw DomainError("combine_quartic_bound: tau must be > 0");
  ScaledValue total;
  const ScaledValue tau_sq = ScaledValue::from_double(tau * tau);
  for (int s = 1; s <= t; ++s) {
    const double coeff = tensorcore::factorial(t) / tensorcore::factorial(s) *
                         symbasis::binomial(t - 1, t - s);
    total += coeff * tau_sq.pow_int(t - s) * per_s_bounds[s - 1];
  }
  return total.root(t) * ScaledValue::from_double(1.0 / n);
}

enum class Verdict { kCertified, kNotCertified };

/// Full certificate with every constant needed to re-derive alpha. The
/// derivation: for unit x and y = Ax, deleting any alpha*n coordinates keeps
///   ||y restricted||^2 >= sigma_min^2 - s_star^2 - sqrt(alpha B) n,
/// and alpha is the largest value for which this is at least sigma_min^2/4,
/// yielding an (alpha n, 1/2)-spread certificate.
struct SpreadCertificate {
  int n = 0, d = 0, t = 0;
  SubsetScanReport scan;
  std::vector<MomentNormBound> per_s_bounds;
  ScaledValue B;
  double B_double = 0.0;
  double sigma_min = 0.0;     // certified lower bound
  double sigma_min_sq = 0.0;  // certified lower bound on the square
  double alpha = 0.0;
  double epsilon_spread = 0.5;
  Verdict verdict = Verdict::kNotCertified;
  int trace_exponent_ell = 4;
  // Distortion consequence of (alpha n, 1/2)-spread; the conversion uses
  // floor(alpha n) and falls back to the universal sqrt(n) ceiling when the
  // certified coordinate budget is below one.
  double distortion_bound = 0.0;
  double spread_t = 0.0;
  bool distortion_vacuous = false;
};

/// Forward conversion: a (t, eps)-spread subspace of R^n has distortion at
/// most sqrt(n/t) / eps^2.
inline double spread_to_distortion(int n, double t_spread, double eps) {
  if (n < 1) throw InvalidDimensionError("spread_to_distortion: n must be >= 1");
  if (!(t_spread >= 1.0 && t_spread <= static_cast<double>(n)))
    throw DomainError("spread_to_distortion: t outside [1, n]");
  if (!(eps > 0.0 && eps <= 1.0))
    throw DomainError("spread_to_distortion: eps outside (0, 1]");
  return std::sqrt(static_cast<double>(n) / t_spread) / (eps * eps);
}

struct SpreadParams {
  double t = 0.0;
  double eps = 0.0;
};

/// Backward conversion: distortion Delta implies (n/(2 Delta^2), 1/(4 Delta))
/// spread.
inline SpreadParams distortion_to_spread(int n, double delta) {
  if (n < 1) throw InvalidDimensionError("distortion_to_spread: n must be >= 1");
  if (!(delta >= 1.0)) throw DomainError("distortion_to_spread: Delta must be >= 1");
  return {static_cast<double>(n) / (2.0 * delta * delta), 1.0 / (4.0 * delta)};
}

inline SpreadCertificate certify_spread(const Eigen::MatrixXd& A, int t) {
  SpreadCertificate cert;
  cert.n = static_cast<int>(A.rows());
  cert.d = static_cast<int>(A.cols());
  cert.t = t;
  cert.scan = scan_subsets(A, t);
  cert.per_s_bounds.reserve(t);
  std::vector<ScaledValue> bounds;
  for (int s = 1; s <= t; ++s) {
    cert.per_s_bounds.push_back(certify_moment_norm(A, s));
    bounds.push_back(cert.per_s_bounds.back().bound);
  }
  cert.B = combine_quartic_bound(t, cert.scan.tau, cert.n, bounds);
  cert.B_double = cert.B.to_double();

  const Eigen::MatrixXd gram = A.transpose() * A;
  const auto bottom = spectral::bottom_eigen_certified(gram);
  cert.sigma_min_sq = std::max(bottom.lambda - bottom.residual_fro, 0.0);
  cert.sigma_min = std::sqrt(cert.sigma_min_sq);

  const double s_star_sq = cert.scan.s_star * cert.scan.s_star;
  const double slack = 0.75 * cert.sigma_min_sq - s_star_sq;
  if (slack > 0.0 && cert.B_double > 0.0 &&
      std::isfinite(cert.B_double)) {
    const double ratio = slack / cert.n;
    cert.alpha = ratio * ratio / cert.B_double;
    cert.verdict = cert.alpha > 0.0 ? Verdict::kCertified : Verdict::kNotCertified;
  }

  if (cert.verdict == Verdict::kCertified) {
    cert.spread_t = std::floor(cert.alpha * cert.n);
    if (cert.spread_t >= 1.0) {
      cert.distortion_bound =
          spread_to_distortion(cert.n, cert.spread_t, cert.epsilon_spread);
      cert.distortion_vacuous =
          cert.distortion_bound >= std::sqrt(static_cast<double>(cert.n));
    } else {
      cert.distortion_bound = std::sqrt(static_cast<double>(cert.n));
      cert.distortion_vacuous = true;
    }
  }
  return cert;
}

}  // namespace certifier
}  // namespace spreadcert
