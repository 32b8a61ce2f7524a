#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spreadcert/errors.hpp"
#include "spreadcert/scaled.hpp"

namespace spreadcert {
namespace spectral {

// Above this dimension a full eigensolve is wasteful; traces of T^2 and T^4
// come from Frobenius norms of T and T*T instead (identical values).
inline constexpr std::int64_t kEigTraceDim = 2500;

inline int scaling_exponent(const Eigen::MatrixXd& T) {
  const double max_abs = T.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return 0;
  return std::ilogb(max_abs) + 1;
}

/// Exact trace of the ell-th power of a symmetric matrix, in the scaled
/// representation. Entries are pre-scaled by a power of two so intermediate
/// magnitudes stay inside double range. Above the eigensolve guard, traces of
/// the second and fourth power come from Frobenius norms of T and of T*T,
/// the latter accumulated block by block so T^2 is never materialized.
inline ScaledValue trace_power(const Eigen::MatrixXd& T, int ell) {
  if (ell < 1) throw DomainError("trace_power: exponent must be >= 1");
  const std::int64_t m = T.rows();
  if (m != T.cols()) throw InvalidDimensionError("trace_power: not square");
  if (m == 0) return ScaledValue();
  const int e = scaling_exponent(T);
  const double scale = std::ldexp(1.0, -e);

  if (ell == 2) {
    double fro2 = 0.0;
    const double* data = T.data();
    const std::int64_t total = m * m;
    for (std::int64_t i = 0; i < total; ++i) {
      const double v = data[i] * scale;
      fro2 += v * v;
    }
    return ScaledValue::from_double(fro2) * ScaledValue(1.0, 2LL * e);
  }
  if (ell == 4) {
    // T is symmetric, so row blocks are transposed column blocks; both GEMM
    // operands stay contiguous.
    const std::int64_t bs = 1024;
    const double alpha = scale * scale;
    Eigen::MatrixXd block(bs, bs);
    double fro4 = 0.0;
    for (std::int64_t j0 = 0; j0 < m; j0 += bs) {
      const std::int64_t bj = std::min(bs, m - j0);
      for (std::int64_t i0 = 0; i0 <= j0; i0 += bs) {
        const std::int64_t bi = std::min(bs, m - i0);
        auto C = block.topLeftCorner(bi, bj);
        C.noalias() = alpha * (T.middleCols(i0, bi).transpose() *
                               T.middleCols(j0, bj));
        fro4 += (i0 == j0 ? 1.0 : 2.0) * C.squaredNorm();
      }
    }
    return ScaledValue::from_double(fro4) * ScaledValue(1.0, 4LL * e);
  }

  if (m <= kEigTraceDim) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(T * scale,
                                                          Eigen::EigenvaluesOnly);
    ScaledValue sum;
    for (std::int64_t i = 0; i < m; ++i)
      sum += ScaledValue::from_double(
          std::pow(solver.eigenvalues()[i], static_cast<double>(ell)));
    return sum * ScaledValue(1.0, static_cast<std::int64_t>(e) * ell);
  }
  throw ResourceLimitError(
      "trace_power: exponent requires an eigensolve beyond the dense guard",
      static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(kEigTraceDim));
}

/// Spectral norm (max |eigenvalue|) of a symmetric matrix.
inline double spectral_norm(const Eigen::MatrixXd& T) {
  if (T.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(T, Eigen::EigenvaluesOnly);
  return std::max(std::fabs(solver.eigenvalues()[0]),
                  std::fabs(solver.eigenvalues()[T.rows() - 1]));
}

struct TopEigenpair {
  double lambda = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;  // ||T u - lambda u||_2 for the computed pair
};

inline TopEigenpair top_eigenpair(const Eigen::MatrixXd& T) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(T);
  const std::int64_t last = T.rows() - 1;
  TopEigenpair top;
  top.lambda = solver.eigenvalues()[last];
  top.vector = solver.eigenvectors().col(last);
  top.residual = (T * top.vector - top.lambda * top.vector).norm();
  return top;
}

struct BottomEigenpair {
  double lambda = 0.0;
  double residual_fro = 0.0;  // ||T V - V Lambda||_F over the full basis
};

/// Smallest eigenvalue with an a-posteriori residual of the full computed
/// decomposition, for certified lower bounds.
inline BottomEigenpair bottom_eigen_certified(const Eigen::MatrixXd& T) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(T);
  BottomEigenpair out;
  out.lambda = solver.eigenvalues()[0];
  out.residual_fro =
      (T * solver.eigenvectors() -
       solver.eigenvectors() * solver.eigenvalues().asDiagonal())
          .norm();
  return out;
}

}  // namespace spectral
}  // namespace spreadcert
