#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "mixedfpca/mvn.hpp"

using namespace mfpca;
using Catch::Approx;

namespace {

// plain Monte-Carlo orthant oracle with antithetic pairs
struct McEstimate {
  double value;
  double se;
};

McEstimate mc_mvn(const Eigen::VectorXd& upper, const Eigen::MatrixXd& R,
                  std::uint64_t seed, int n_draws) {
  const int d = static_cast<int>(upper.size());
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(R).matrixL();
  Rng rng(seed);
  double hits = 0.0;
  Eigen::VectorXd z(d);
  for (int i = 0; i < n_draws; ++i) {
    for (int a = 0; a < d; ++a) z[a] = rng.normal();
    const Eigen::VectorXd x = L * z;
    bool in = true;
    for (int a = 0; a < d; ++a)
      if (x[a] > upper[a]) {
        in = false;
        break;
      }
    hits += in;
  }
  const double p = hits / n_draws;
  return {p, std::sqrt(std::max(p * (1 - p), 1e-12) / n_draws)};
}

}  // namespace

TEST_CASE("bivariate cdf closed forms") {
  CHECK(bvn_cdf(0, 0, 0) == Approx(0.25).margin(1e-14));
  // quarter + asin(rho)/(2 pi)
  for (double r : {-0.95, -0.5, -0.1, 0.3, 0.5, 0.8, 0.99}) {
    CHECK(bvn_cdf(0, 0, r) ==
          Approx(0.25 + std::asin(r) / (2 * std::numbers::pi)).margin(1e-10));
  }
  CHECK(bvn_cdf(0, 0, 0.5) == Approx(1.0 / 3.0).margin(1e-12));
  CHECK(bvn_cdf(kInf, 0.7, 0.4) == Approx(std_normal_cdf(0.7)).margin(1e-14));
  CHECK(bvn_cdf(-kInf, 0.7, 0.4) == 0.0);
  CHECK_THROWS_AS(bvn_cdf(0, 0, 1.5), std::invalid_argument);
}

TEST_CASE("bivariate cdf identities on random arguments") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(-3, 3);
    const double b = rng.uniform(-3, 3);
    const double r = rng.uniform(-0.99, 0.99);
    // independence
    CHECK(bvn_cdf(a, b, 0.0) ==
          Approx(std_normal_cdf(a) * std_normal_cdf(b)).margin(1e-10));
    // symmetry
    CHECK(bvn_cdf(a, b, r) == Approx(bvn_cdf(b, a, r)).margin(1e-14));
    // reflection
    CHECK(bvn_cdf(-a, -b, r) ==
          Approx(1.0 - std_normal_cdf(a) - std_normal_cdf(b) + bvn_cdf(a, b, r))
              .margin(1e-10));
  }
}

TEST_CASE("deterministic trivariate and quadrivariate cdfs") {
  Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();
  CHECK(tvn_cdf({0, 0, 0}, I3) == Approx(0.125).margin(1e-10));
  // marginalization with an infinite coordinate
  Eigen::Matrix3d R;
  R << 1, 0.5, 0.3, 0.5, 1, -0.2, 0.3, -0.2, 1;
  CHECK(tvn_cdf({kInf, 0.4, -0.3}, R) ==
        Approx(bvn_cdf(0.4, -0.3, -0.2)).margin(1e-10));
  CHECK(tvn_cdf({-kInf, 0.4, -0.3}, R) == 0.0);

  Eigen::Matrix4d R4 = Eigen::Matrix4d::Identity();
  CHECK(qvn_cdf({0, 0, 0, 0}, R4) == Approx(0.0625).margin(1e-9));
  R4 << 1, 0.4, 0.4, 0.4, 0.4, 1, 0.4, 0.4, 0.4, 0.4, 1, 0.4, 0.4, 0.4, 0.4, 1;
  CHECK(qvn_cdf({0.3, -0.2, 0.1, kInf}, R4) ==
        Approx(tvn_cdf({0.3, -0.2, 0.1},
                       R4.topLeftCorner<3, 3>())).margin(1e-9));
}

TEST_CASE("trivariate/quadrivariate cdfs against Monte Carlo") {
  Rng rng(123);
  for (int trial = 0; trial < 6; ++trial) {
    // random correlation via random Gram matrix
    Eigen::MatrixXd A(3, 3);
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = rng.normal();
    Eigen::MatrixXd S = A * A.transpose();
    Eigen::VectorXd d = S.diagonal().cwiseSqrt();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) S(i, j) /= d[i] * d[j];
    Eigen::Vector3d b(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                      rng.uniform(-1.5, 1.5));
    const auto mc = mc_mvn(b, S, 1000 + trial, 2'000'000);
    CHECK(tvn_cdf(b, S) == Approx(mc.value).margin(4 * mc.se));
  }
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::MatrixXd A(4, 4);
    for (int i = 0; i < 16; ++i) A(i / 4, i % 4) = rng.normal();
    Eigen::MatrixXd S = A * A.transpose() + 0.3 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd d = S.diagonal().cwiseSqrt();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) S(i, j) /= d[i] * d[j];
    Eigen::Vector4d b(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                      rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    const auto mc = mc_mvn(b, S, 2000 + trial, 2'000'000);
    CHECK(qvn_cdf(b, S) == Approx(mc.value).margin(4 * mc.se));
  }
}

TEST_CASE("lattice mvn_cdf: independence, marginalization, reproducibility") {
  Eigen::VectorXd b3(3);
  b3 << 0, 0, 0;
  const CorrelationMatrix I3(Eigen::MatrixXd::Identity(3, 3));
  const auto r = mvn_cdf(b3, I3, 17);
  CHECK(r.value == Approx(0.125).margin(1e-5));
  CHECK(r.se <= 1e-6);

  // bit-exact reproducibility for a fixed seed
  const auto r2 = mvn_cdf(b3, I3, 17);
  CHECK(r.value == r2.value);

  // one infinite coordinate reduces to the lower-dimensional margin
  Eigen::MatrixXd R(3, 3);
  R << 1, 0.5, 0.2, 0.5, 1, 0.1, 0.2, 0.1, 1;
  Eigen::VectorXd bi(3);
  bi << 0.4, kInf, -0.2;
  CHECK(mvn_cdf(bi, CorrelationMatrix(R), 3).value ==
        Approx(bvn_cdf(0.4, -0.2, 0.2)).margin(1e-12));

  CHECK_THROWS_AS(mvn_cdf(Eigen::VectorXd::Zero(2), I3, 1), std::invalid_argument);
}

TEST_CASE("lattice mvn_cdf matches a Monte Carlo oracle") {
  Eigen::MatrixXd R(3, 3);
  R << 1, 0.4, 0.4, 0.4, 1, 0.4, 0.4, 0.4, 1;
  Eigen::VectorXd b(3);
  b << 0.3, -0.2, 0.1;
  const auto mc = mc_mvn(b, R, 555, 4'000'000);
  const auto lat = mvn_cdf(b, CorrelationMatrix(R), 99);
  CHECK(lat.value == Approx(mc.value).margin(3 * mc.se + 3 * lat.se));
}

TEST_CASE("mvn_cdf is nondecreasing in every upper coordinate") {
  Eigen::MatrixXd R(4, 4);
  R << 1, 0.3, -0.2, 0.1, 0.3, 1, 0.25, -0.15, -0.2, 0.25, 1, 0.4, 0.1, -0.15, 0.4, 1;
  const CorrelationMatrix C(R);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd b(4);
    for (int i = 0; i < 4; ++i) b[i] = rng.uniform(-2, 2);
    const double base = qvn_cdf(b, R);
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector4d b2 = b;
      b2[i] += 0.5;
      CHECK(qvn_cdf(b2, R) >= base - 1e-10);
    }
  }
}

TEST_CASE("correlation matrix validation") {
  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0.9, 0.9, 0.9, 1, -0.9, 0.9, -0.9, 1;  // indefinite
  CHECK_THROWS_AS(CorrelationMatrix(bad), std::invalid_argument);
  Eigen::MatrixXd near(2, 2);
  near << 1, 1.0 - 1e-10, 1.0 - 1e-10, 1;  // nudged into the interior
  const CorrelationMatrix c(near);
  CHECK(c.m(0, 1) == Approx(1.0 - 1e-8).margin(1e-12));
}
