#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spreadcert/errors.hpp"
#include "spreadcert/parallel.hpp"
#include "spreadcert/randmodels.hpp"
#include "spreadcert/rng.hpp"
#include "spreadcert/scaled.hpp"
#include "spreadcert/tensorcore.hpp"

namespace spreadcert {
namespace recovery {

inline constexpr std::uint64_t kTagRestart = 0x52535452;

struct AscentParams {
  int max_steps = 400;
  double initial_step = 0.25;
  double backtrack = 0.5;         // in (0, 1)
  double gradient_tolerance = 1e-7;
  int restarts = 30;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_steps < 1 || !(initial_step > 0.0) ||
        !(backtrack > 0.0 && backtrack < 1.0) || !(gradient_tolerance > 0.0))
      throw DomainError("AscentParams: all fields must be positive, backtrack < 1");
  }
};

/// Objective value and gradient, both in scaled form: the gradient is
/// grad_mantissa * 2^grad_exp2. The value is t! e_t(z) with z_i = <a_i,x>^4;
/// the gradient chains through the elementary-symmetric partials.
struct Objective {
  ScaledValue value;
  Eigen::VectorXd grad_mantissa;
  std::int64_t grad_exp2 = 0;
};

inline ScaledValue objective_value(const Eigen::MatrixXd& A_tilde, int t,
                                   const Eigen::VectorXd& x) {
  return tensorcore::eval_Pt(A_tilde, t, x);
}

inline Objective objective_and_grad(const Eigen::MatrixXd& A_tilde, int t,
                                    const Eigen::VectorXd& x) {
  if (x.norm() == 0.0) throw DomainError("objective_and_grad: x must be nonzero");
  if (A_tilde.cols() != x.size())
    throw InvalidDimensionError("objective_and_grad: dimension mismatch");
  const Eigen::VectorXd c = A_tilde * x;
  const Eigen::VectorXd z = c.array().square().square();
  auto grad = tensorcore::elem_sym_grad(z, t);
  const double t_fact = tensorcore::factorial(t);

  Objective out;
  out.value = grad.value * t_fact;
  // d/dx of t! e_t(z) = t! sum_i (de_t/dz_i) 4 c_i^3 a_i
  const Eigen::VectorXd weights =
      4.0 * t_fact * grad.partial_mantissa.array() * c.array().cube();
  Eigen::VectorXd gm = A_tilde.transpose() * weights;
  const double max_abs = gm.cwiseAbs().maxCoeff();
  if (max_abs > 0.0) {
    const int shift = std::ilogb(max_abs) + 1;
    gm *= std::ldexp(1.0, -shift);
    out.grad_exp2 = grad.partial_exp2 + shift;
  } else {
    out.grad_exp2 = 0;
  }
  out.grad_mantissa = std::move(gm);
  return out;
}

/// Projected gradient ascent on the unit sphere with backtracking line
/// search. Accepted steps strictly increase the objective; the returned point
/// is therefore the best iterate. Stops when the tangential gradient is small
/// relative to the objective scale (for a degree-4t homogeneous objective the
/// radial gradient equals 4t times the value, which sets the scale).
inline Eigen::VectorXd ascend(const Eigen::MatrixXd& A_tilde, int t,
                              const Eigen::VectorXd& x0,
                              const AscentParams& params) {
  params.validate();
  if (x0.norm() == 0.0) throw DomainError("ascend: x0 must be nonzero");
  Eigen::VectorXd x = x0 / x0.norm();
  Objective obj = objective_and_grad(A_tilde, t, x);
  double step = params.initial_step;

  for (int iter = 0; iter < params.max_steps; ++iter) {
    Eigen::VectorXd tangent =
        obj.grad_mantissa - obj.grad_mantissa.dot(x) * x;
    const double tangent_norm = tangent.norm();
    if (tangent_norm == 0.0) break;
    const ScaledValue tangent_scale(tangent_norm, obj.grad_exp2);
    if (!obj.value.is_zero() &&
        tangent_scale <= params.gradient_tolerance * (4.0 * t) * obj.value)
      break;
    tangent /= tangent_norm;

    bool accepted = false;
    while (step >= 1e-14) {
      Eigen::VectorXd candidate = x + step * tangent;
      candidate.normalize();
      const ScaledValue candidate_value =
          objective_value(A_tilde, t, candidate);
      if (candidate_value > obj.value) {
        x = std::move(candidate);
        obj = objective_and_grad(A_tilde, t, x);
        step = std::min(step * 1.6, 1.0);
        accepted = true;
        break;
      }
      step *= params.backtrack;
    }
    if (!accepted) break;
  }
  return x;
}

struct CandidateInfo {
  int restart = 0;
  double score = 0.0;
  ScaledValue objective;
};

struct RecoveryResult {
  Eigen::VectorXd v_hat;
  Eigen::VectorXd x_hat;
  double score = 0.0;
  ScaledValue objective;
  int restarts_used = 0;
  std::vector<CandidateInfo> candidates;
};

/// Multi-restart recovery: ascend from seeded random sphere starts, map each
/// candidate through the observed matrix, score by the mass of its top
/// floor(rho n) coordinates, and return the best-scoring candidate (lowest
/// restart index on ties). Reads nothing beyond (A_tilde, t, rho, params).
inline RecoveryResult recover(const Eigen::MatrixXd& A_tilde, int t, double rho,
                              const AscentParams& params) {
  params.validate();
  if (params.restarts < 1) throw DomainError("recover: restarts must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("recover: rho outside (0,1)");
  const int n = static_cast<int>(A_tilde.rows());
  const int d = static_cast<int>(A_tilde.cols());
  if (n < 1 || d < 1) throw InvalidDimensionError("recover: empty matrix");

  struct Slot {
    Eigen::VectorXd x_hat, v_hat;
    double score = 0.0;
    ScaledValue objective;
  };
  std::vector<Slot> slots(params.restarts);
  parallel_for(0, params.restarts, [&](std::int64_t i) {
    RngStream stream = derive_stream(params.seed, kTagRestart, i);
    const Eigen::VectorXd x0 = stream.unit_vector(d);
    Slot slot;
    slot.x_hat = ascend(A_tilde, t, x0, params);
    slot.objective = objective_value(A_tilde, t, slot.x_hat);
    Eigen::VectorXd v = A_tilde * slot.x_hat;
    const double norm = v.norm();
    if (norm > 0.0) {
      slot.v_hat = v / norm;
      slot.score =
          randmodels::compressibility_profile(slot.v_hat, rho).mass_fraction;
    } else {
      slot.v_hat = Eigen::VectorXd::Zero(n);
      slot.score = 0.0;
    }
    slots[i] = std::move(slot);
  });

  RecoveryResult result;
  result.restarts_used = params.restarts;
  int best = 0;
  for (int i = 0; i < params.restarts; ++i) {
    result.candidates.push_back({i, slots[i].score, slots[i].objective});
    if (slots[i].score > slots[best].score) best = i;
  }
  result.v_hat = slots[best].v_hat;
  result.x_hat = slots[best].x_hat;
  result.score = slots[best].score;
  result.objective = slots[best].objective;
  return result;
}

/// Squared inner product of the unit normalizations; sign-invariant.
inline double evaluate_overlap(const Eigen::VectorXd& v_hat,
                               const Eigen::VectorXd& v) {
  const double a = v_hat.norm(), b = v.norm();
  if (a == 0.0 || b == 0.0)
    throw DomainError("evaluate_overlap: zero vector");
  const double dot = v_hat.dot(v) / (a * b);
  return dot * dot;
}

}  // namespace recovery
}  // namespace spreadcert
