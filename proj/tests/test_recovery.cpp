#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "spreadcert/oracle.hpp"
#include "spreadcert/randmodels.hpp"
#include "spreadcert/recovery.hpp"

using namespace spreadcert;
using namespace spreadcert::recovery;

namespace {

Eigen::VectorXd actual_gradient(const Objective& obj) {
  return obj.grad_mantissa *
         std::ldexp(1.0, static_cast<int>(obj.grad_exp2));
}

}  // namespace

TEST_CASE("first-level objective has the closed-form value and gradient") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(30, 5, 1.0, 2);
  RngStream rng(3);
  const Eigen::VectorXd x = rng.unit_vector(5);
  const auto obj = objective_and_grad(A, 1, x);

  const Eigen::VectorXd c = A * x;
  CHECK(obj.value.to_double() ==
        Catch::Approx(c.array().pow(4).sum()).epsilon(1e-12));
  const Eigen::VectorXd expected = A.transpose() * (4.0 * c.array().cube()).matrix();
  CHECK((actual_gradient(obj) - expected).norm() <= 1e-10 * expected.norm());
}

TEST_CASE("the radial derivative of a degree-4t objective is 4t times it") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(25, 6, 1.0, 7);
  RngStream rng(8);
  for (int t : {1, 2, 3}) {
    const Eigen::VectorXd x = rng.unit_vector(6);
    const auto obj = objective_and_grad(A, t, x);
    const ScaledValue radial(actual_gradient(obj).dot(x), 0);
    CHECK(ScaledValue::relative_gap(radial, 4.0 * t * obj.value) <= 1e-9);
  }
}

TEST_CASE("objective gradient matches central finite differences") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(100, 10, 1.0, 5);
  RngStream rng(6);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const int t = 1 + trial % 2;
    const Eigen::VectorXd x = rng.unit_vector(10);
    const auto obj = objective_and_grad(A, t, x);
    const Eigen::VectorXd grad = actual_gradient(obj);
    Eigen::VectorXd fd(10);
    for (int j = 0; j < 10; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd[j] = (objective_value(A, t, xp).to_double() -
               objective_value(A, t, xm).to_double()) /
              (2 * h);
    }
    CHECK((grad - fd).norm() <= 1e-5 * fd.norm());
  }
}

TEST_CASE("objective value agrees with brute-force enumeration") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(12, 5, 1.0, 9);
  RngStream rng(10);
  const Eigen::VectorXd x = rng.unit_vector(5);
  const ScaledValue fast = objective_value(A, 3, x);
  const ScaledValue brute = oracle::brute_Pt(A, 3, x);
  CHECK(ScaledValue::relative_gap(fast, brute) <= 1e-9);
}

TEST_CASE("ascent increases the objective and stays on the sphere") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(80, 8, 1.0, 12);
  RngStream rng(13);
  AscentParams params;
  params.max_steps = 150;
  const Eigen::VectorXd x0 = rng.unit_vector(8);
  const Eigen::VectorXd x_hat = ascend(A, 1, x0, params);
  CHECK(std::fabs(x_hat.norm() - 1.0) <= 1e-12);
  CHECK(objective_value(A, 1, x0) <= objective_value(A, 1, x_hat));
  // deterministic
  CHECK((ascend(A, 1, x0, params).array() == x_hat.array()).all());
}

TEST_CASE("ascent converges to the planted direction from a warm start") {
  const int n = 2000, d = 30;
  randmodels::NBRParams nbr{0.01, 0.1};
  AscentParams params;
  params.max_steps = 400;
  int hits = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd v = randmodels::sample_nbr(n, nbr, 900 + seed);
    const auto inst = randmodels::sample_planted(n, d, v, 900 + seed);
    RngStream rng(7000 + seed);
    Eigen::VectorXd x0 = inst.hidden_r1 + 0.05 * rng.unit_vector(d);
    const Eigen::VectorXd x_hat = ascend(inst.A_tilde, 1, x0, params);
    const double align = std::pow(x_hat.dot(inst.hidden_r1), 2.0);
    if (align >= 0.95) ++hits;
  }
  CHECK(hits >= 18);
}

TEST_CASE("a single restart is returned unconditionally") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(50, 6, 1.0, 3);
  AscentParams params;
  params.restarts = 1;
  params.seed = 5;
  const auto result = recover(A, 1, 0.1, params);
  CHECK(result.restarts_used == 1);
  CHECK(result.candidates.size() == 1);
  CHECK(result.score == result.candidates[0].score);
}

TEST_CASE("recovery validates its arguments") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(50, 6, 1.0, 3);
  AscentParams params;
  params.restarts = 0;
  CHECK_THROWS_AS(recover(A, 1, 0.1, params), DomainError);
  params.restarts = 2;
  CHECK_THROWS_AS(recover(A, 1, 1.5, params), DomainError);
}

TEST_CASE("recovery is blind: stripped instances give identical output") {
  const int n = 400, d = 10;
  randmodels::NBRParams nbr{0.05, 0.1};
  const Eigen::VectorXd v = randmodels::sample_nbr(n, nbr, 21);
  auto inst = randmodels::sample_planted(n, d, v, 21);
  inst.rho = 0.05;

  const std::string path = "test_blind_instance.bin";
  randmodels::save_instance(path, inst, /*strip_eval=*/true);
  const auto blind = randmodels::load_instance_blind(path);
  std::filesystem::remove(path);

  AscentParams params;
  params.restarts = 4;
  params.seed = 77;
  const auto direct = recover(inst.A_tilde, 1, 0.05, params);
  const auto from_file = recover(blind.A_tilde, 1, 0.05, params);
  CHECK((direct.v_hat.array() == from_file.v_hat.array()).all());
  CHECK(direct.score == from_file.score);
}

TEST_CASE("best score never drops as the restart budget grows") {
  const Eigen::MatrixXd A = randmodels::sample_gaussian(120, 8, 1.0, 31);
  AscentParams params;
  params.seed = 4;
  params.max_steps = 80;
  double prev = 0.0;
  for (int restarts : {1, 3, 6, 10}) {
    params.restarts = restarts;
    const auto result = recover(A, 1, 0.05, params);
    CHECK(result.score >= prev - 1e-15);
    prev = result.score;
  }
}

TEST_CASE("recovery succeeds on an easy planted instance") {
  const int n = 1000, d = 16;
  randmodels::NBRParams nbr{0.02, 0.1};
  const Eigen::VectorXd v = randmodels::sample_nbr(n, nbr, 5);
  const auto inst = randmodels::sample_planted(n, d, v, 5);
  AscentParams params;
  params.restarts = 10;
  params.seed = 5;
  const auto result = recover(inst.A_tilde, 1, 0.02, params);
  CHECK(evaluate_overlap(result.v_hat, inst.hidden_v) >= 0.8);
}

TEST_CASE("directions near the hidden one score higher than random ones") {
  const int n = 1000, d = 20;
  randmodels::NBRParams nbr{0.02, 0.1};
  int wins = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::VectorXd v = randmodels::sample_nbr(n, nbr, 40 + trial);
    const auto inst = randmodels::sample_planted(n, d, v, 40 + trial);
    RngStream rng(800 + trial);
    const Eigen::VectorXd close =
        (inst.hidden_r1 + 0.02 * rng.unit_vector(d)).normalized();
    const Eigen::VectorXd random = rng.unit_vector(d);
    const double score_close =
        randmodels::compressibility_profile(inst.A_tilde * close, 0.02)
            .mass_fraction;
    const double score_random =
        randmodels::compressibility_profile(inst.A_tilde * random, 0.02)
            .mass_fraction;
    if (score_close > score_random) ++wins;
  }
  CHECK(wins >= 17);
}

TEST_CASE("overlap evaluation is sign-invariant") {
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, -1.0;
  CHECK(evaluate_overlap(v, v) == Catch::Approx(1.0));
  CHECK(evaluate_overlap(-v, v) == Catch::Approx(1.0));
  Eigen::VectorXd perp(3);
  perp << 2.0, -1.0, 0.0;
  CHECK(evaluate_overlap(perp, v) == Catch::Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(evaluate_overlap(Eigen::VectorXd::Zero(3), v), DomainError);
}
