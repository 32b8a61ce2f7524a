#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spreadcert/randmodels.hpp"

using namespace spreadcert;
using namespace spreadcert::randmodels;

TEST_CASE("samplers are deterministic in the seed") {
  const Eigen::MatrixXd a = sample_gaussian(40, 7, 1.0, 123);
  const Eigen::MatrixXd b = sample_gaussian(40, 7, 1.0, 123);
  CHECK((a.array() == b.array()).all());
  CHECK(!(sample_gaussian(40, 7, 1.0, 124).array() == a.array()).all());

  NBRParams params{0.1, 0.2};
  CHECK((sample_nbr(100, params, 5).array() ==
         sample_nbr(100, params, 5).array()).all());
}

TEST_CASE("gaussian sample variance lands near the request") {
  const Eigen::MatrixXd a = sample_gaussian(100000, 1, 2.5, 42);
  const double var = a.array().square().mean();
  CHECK(var == Catch::Approx(2.5).epsilon(0.05));
}

TEST_CASE("gaussian singular values stay inside the envelope") {
  const int n = 500, d = 30;
  const double margin = 3.0 * std::sqrt(2.0 * std::log(400.0));
  int inside = 0;
  for (int seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd a = sample_gaussian(n, d, 1.0, 1000 + seed);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const double smax = svd.singularValues()[0];
    const double smin = svd.singularValues()[d - 1];
    const double lo = std::sqrt(n) - std::sqrt(d) - margin;
    const double hi = std::sqrt(n) + std::sqrt(d) + margin;
    if (smin >= lo && smax <= hi) ++inside;
  }
  CHECK(inside >= 4);
}

TEST_CASE("invalid sampler arguments are rejected") {
  CHECK_THROWS_AS(sample_gaussian(0, 3, 1.0, 1), InvalidDimensionError);
  CHECK_THROWS_AS(sample_gaussian(3, 3, 0.0, 1), DomainError);
}

TEST_CASE("noiseless spikes have the stated magnitude and support") {
  const int n = 2000;
  NBRParams params{0.05, 0.0};
  CHECK(params.rho_prime() == Catch::Approx(0.05));
  const Eigen::VectorXd x = sample_nbr(n, params, 9);
  const double spike = 1.0 / std::sqrt(0.05 * n);
  int spikes = 0;
  for (int i = 0; i < n; ++i) {
    if (x[i] == 0.0) continue;
    CHECK(std::fabs(x[i]) == Catch::Approx(spike));
    ++spikes;
  }
  CHECK(spikes > 0);
}

TEST_CASE("noisy samples carry unit total mass") {
  NBRParams params{0.05, 0.1};
  const Eigen::VectorXd x = sample_nbr(100000, params, 17);
  CHECK(x.squaredNorm() >= 0.97);
  CHECK(x.squaredNorm() <= 1.03);
}

TEST_CASE("spike fraction concentrates at the sparsity level") {
  const int n = 20000;
  const double rho = 0.05, sigma = 0.1;
  NBRParams params{rho, sigma};
  const double spike = 1.0 / std::sqrt(params.rho_prime() * n);
  const double band = 3.0 * std::sqrt(rho * (1 - rho) / n);
  int ok = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd x = sample_nbr(n, params, 300 + seed);
    int spikes = 0;
    for (int i = 0; i < n; ++i)
      if (std::fabs(std::fabs(x[i]) - spike) < 1e-12) ++spikes;
    if (std::fabs(static_cast<double>(spikes) / n - rho) <= band) ++ok;
  }
  CHECK(ok >= 19);
}

TEST_CASE("noise level beyond the admissible range is rejected") {
  NBRParams params{0.2, 1.2};  // 1.2 >= 1/sqrt(0.8)
  CHECK_THROWS_AS(sample_nbr(10, params, 1), DomainError);
}

TEST_CASE("planted instance wiring") {
  const int n = 300, d = 20;
  NBRParams params{0.05, 0.1};
  const Eigen::VectorXd v = sample_nbr(n, params, 7);
  const PlantedInstance inst = sample_planted(n, d, v, 7);

  CHECK((inst.A_tilde * inst.hidden_r1 - inst.hidden_v).norm() <= 1e-12);
  CHECK(std::fabs(inst.hidden_r1.norm() - 1.0) <= 1e-12);
  CHECK(std::fabs(inst.hidden_v.norm() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(sample_planted(10, 11, Eigen::VectorXd::Ones(10), 1),
                  InvalidDimensionError);
}

TEST_CASE("rotations are orthogonal with positive-diagonal convention") {
  const Eigen::MatrixXd R = sample_rotation(15, 3);
  CHECK((R.transpose() * R - Eigen::MatrixXd::Identity(15, 15)).norm() <= 1e-12);
  CHECK((R.array() == sample_rotation(15, 3).array()).all());
}

TEST_CASE("planted basis has near-unit singular values") {
  // Envelope 1 +/- (sqrt(d/n) + margin), matching the concentration of the
  // gaussian block of the basis; the planted unit column perturbs this by a
  // lower-order amount.
  const int n = 2000, d = 50;
  const double slack = std::sqrt(static_cast<double>(d) / n) + 5.0 / std::sqrt(n);
  int inside = 0;
  for (int seed = 0; seed < 5; ++seed) {
    NBRParams params{0.02, 0.1};
    const Eigen::VectorXd v = sample_nbr(n, params, 100 + seed);
    const PlantedInstance inst = sample_planted(n, d, v, 100 + seed);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.A_tilde);
    if (svd.singularValues()[0] <= 1.0 + slack &&
        svd.singularValues()[d - 1] >= 1.0 - slack)
      ++inside;
  }
  CHECK(inside == 5);
}

TEST_CASE("compressibility of canonical vectors") {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(50);
  e1[0] = 1.0;
  CHECK(compressibility_profile(e1, 0.02).mass_fraction == Catch::Approx(1.0));

  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(100, 0.1);
  CHECK(compressibility_profile(flat, 0.25).mass_fraction ==
        Catch::Approx(0.5));
}

TEST_CASE("compressibility ties break to the lowest index") {
  Eigen::VectorXd v(4);
  v << 1.0, -1.0, 1.0, 0.5;
  const auto profile = compressibility_profile(v, 0.5);  // top 2 of 4
  CHECK(profile.support == std::vector<int>{0, 1});
}

TEST_CASE("compressibility is monotone in the budget") {
  RngStream rng(2);
  const Eigen::VectorXd v = rng.gaussian_vector(200);
  double prev = 0.0;
  for (double rho : {0.01, 0.05, 0.2, 0.5, 1.0}) {
    const double mass = compressibility_profile(v, rho).mass_fraction;
    CHECK(mass >= prev - 1e-12);
    prev = mass;
  }
  CHECK(prev == Catch::Approx(1.0));
}

TEST_CASE("an empty budget yields an empty profile") {
  const auto profile = compressibility_profile(Eigen::VectorXd::Ones(10), 0.05);
  CHECK(profile.mass_fraction == 0.0);
  CHECK(profile.support.empty());
}

TEST_CASE("four-norm of any vector dominates its compressed mass") {
  RngStream rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v = rng.gaussian_vector(60);
    v /= v.norm();
    const double rho = 0.05 + 0.4 * rng.next_uniform();
    const double mass = compressibility_profile(v, rho).mass_fraction;
    const double gamma = 1.0 - mass;
    const double lhs = v.array().pow(4).sum();
    const double rhs = std::pow(1.0 - gamma, 4.0) / (rho * 60.0);
    CHECK(lhs >= rhs * (1.0 - 1e-10));
  }
}

TEST_CASE("nBR vectors concentrate their mass on the spike support") {
  const int n = 10000;
  NBRParams params{0.02, 0.1};
  int ok = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd v = sample_nbr(n, params, 500 + seed);
    if (compressibility_profile(v, 0.02).mass_fraction >= 0.9) ++ok;
  }
  CHECK(ok == 20);
}

TEST_CASE("instance container round trip") {
  const int n = 30, d = 5;
  NBRParams params{0.2, 0.1};
  PlantedInstance inst = sample_planted(n, d, sample_nbr(n, params, 3), 3);
  inst.rho = 0.2;
  inst.sigma = 0.1;
  const std::string path = "test_instance_container.bin";

  save_instance(path, inst);
  const BlindInstance blind = load_instance_blind(path);
  CHECK(blind.n == n);
  CHECK(blind.d == d);
  CHECK(blind.rho == 0.2);
  CHECK((blind.A_tilde.array() == inst.A_tilde.array()).all());
  CHECK(blind.file_has_eval);

  const auto eval = load_eval_block(path);
  REQUIRE(eval.has_value());
  CHECK((eval->v.array() == inst.hidden_v.array()).all());
  CHECK((eval->r1.array() == inst.hidden_r1.array()).all());

  save_instance(path, inst, /*strip_eval=*/true);
  CHECK_FALSE(load_instance_blind(path).file_has_eval);
  CHECK_FALSE(load_eval_block(path).has_value());

  std::filesystem::remove(path);
}

TEST_CASE("corrupt containers are rejected") {
  const std::string path = "test_bad_container.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTMAGIC";
  }
  CHECK_THROWS_AS(load_instance_blind(path), DomainError);
  std::filesystem::remove(path);
}
