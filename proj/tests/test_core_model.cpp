#include <cmath>

#include "doctest.h"
#include "zippca/core_model.hpp"
#include "zippca/rng.hpp"

using namespace zippca;

TEST_CASE("CountMatrix depths and support") {
  MatrixXd x(2, 3);
  x << 1, 0, 2, 0, 0, 4;
  const CountMatrix c(x);
  CHECK(c.depths()(0) == 3.0);
  CHECK(c.depths()(1) == 4.0);
  REQUIRE(c.empty_taxa().size() == 1);
  CHECK(c.empty_taxa()[0] == 1);
  CHECK(c.empty_samples().empty());
  CHECK_THROWS_AS(c.require_support(), EmptySupportError);

  MatrixXd bad(1, 2);
  bad << 1, -1;
  CHECK_THROWS_AS(CountMatrix{bad}, ValidationError);
  bad << 1, 0.5;
  CHECK_THROWS_AS(CountMatrix{bad}, ValidationError);
}

TEST_CASE("Hyperparams validation") {
  Hyperparams h = Hyperparams::with_rank(2);
  CHECK(h.sigma_beta.size() == 2);
  CHECK(h.sigma_beta.isOnes());
  CHECK_NOTHROW(h.validate(5));
  CHECK_THROWS_AS(h.validate(2), ValidationError);
  h.pi0 = 1.0;
  CHECK_THROWS_AS(h.validate(5), ValidationError);
  h = Hyperparams::with_rank(2);
  h.alpha1 = 0.0;
  CHECK_THROWS_AS(h.validate(5), ValidationError);
}

TEST_CASE("alr examples") {
  VectorXd rho(2);
  rho << 0.5, 0.5;
  CHECK(alr(rho).size() == 1);
  CHECK(alr(rho)(0) == doctest::Approx(0.0));
  VectorXd rho3(3);
  rho3 << 0.5, 0.25, 0.25;
  CHECK(alr(rho3)(0) == doctest::Approx(std::log(2.0)));
  CHECK(alr(rho3)(1) == doctest::Approx(0.0));
  CHECK(alr(VectorXd::Constant(6, 1.0 / 6)).cwiseAbs().maxCoeff() < 1e-15);

  VectorXd mu(2);
  mu << std::log(2.0), 0.0;
  const VectorXd back = alr_inv(mu);
  CHECK(back(0) == doctest::Approx(0.5));
  CHECK(back(1) == doctest::Approx(0.25));
  CHECK(back(2) == doctest::Approx(0.25));
  CHECK((alr_inv(VectorXd::Zero(4)).array() - 0.2).abs().maxCoeff() < 1e-15);
}

TEST_CASE("alr domain errors") {
  VectorXd zero(2);
  zero << 1.0, 0.0;
  CHECK_THROWS_AS(alr(zero), DomainError);
  VectorXd unnormalized(2);
  unnormalized << 0.5, 0.6;
  CHECK_THROWS_AS(alr(unnormalized), ValidationError);
  VectorXd inf(1);
  inf << INFINITY;
  CHECK_THROWS_AS(alr_inv(inf), ValidationError);
}

TEST_CASE("property: alr_inv inverts alr on random simplex points") {
  Rng rng(11);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Index p = 2 + t % 9;
    VectorXd rho(p);
    for (Index j = 0; j < p; ++j) rho(j) = rng.gamma(1.0) + 1e-6;
    rho /= rho.sum();
    worst = std::max(worst, (alr_inv(alr(rho)) - rho).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("log_sum_exp") {
  VectorXd v(3);
  v << 1000.0, 1000.0, -INFINITY;
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(std::isinf(log_sum_exp(VectorXd())));
}

TEST_CASE("underlying_compositions against a double-loop oracle") {
  Rng rng(5);
  const Index n = 3, p = 4, k = 2;
  VectorXd beta0(p);
  MatrixXd B(p, k), F(n, k);
  for (Index j = 0; j < p; ++j) beta0(j) = rng.normal();
  for (Index a = 0; a < B.size(); ++a) B.data()[a] = rng.normal();
  for (Index a = 0; a < F.size(); ++a) F.data()[a] = rng.normal();
  const MatrixXd rho = underlying_compositions(beta0, B, F);
  for (Index i = 0; i < n; ++i) {
    double denom = 0.0;
    for (Index l = 0; l < p; ++l) {
      double logit = beta0(l);
      for (Index c = 0; c < k; ++c) logit += F(i, c) * B(l, c);
      denom += std::exp(logit);
    }
    for (Index j = 0; j < p; ++j) {
      double logit = beta0(j);
      for (Index c = 0; c < k; ++c) logit += F(i, c) * B(j, c);
      CHECK(std::abs(rho(i, j) - std::exp(logit) / denom) < 1e-12);
    }
  }
}

TEST_CASE("underlying_compositions special cases") {
  const MatrixXd uniform = underlying_compositions(VectorXd::Constant(5, 3.0), MatrixXd::Random(5, 2),
                                                   MatrixXd::Zero(4, 2));
  CHECK((uniform.array() - 0.2).abs().maxCoeff() < 1e-15);
  VectorXd beta0(3);
  beta0 << 0.0, std::log(2.0), std::log(5.0);
  const MatrixXd rho = underlying_compositions(beta0, MatrixXd::Ones(3, 1), MatrixXd::Zero(2, 1));
  CHECK(rho(1, 2) == doctest::Approx(0.625));
  CHECK_THROWS_AS(underlying_compositions(beta0, MatrixXd::Ones(2, 1), MatrixXd::Zero(2, 1)), ValidationError);
}

TEST_CASE("property: compositions sum to one and ignore logit shifts") {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Index p = 3 + t % 5;
    VectorXd beta0(p);
    MatrixXd B(p, 2), F(4, 2);
    for (Index j = 0; j < p; ++j) beta0(j) = 10.0 * rng.normal();
    for (Index a = 0; a < B.size(); ++a) B.data()[a] = rng.normal();
    for (Index a = 0; a < F.size(); ++a) F.data()[a] = rng.normal();
    const MatrixXd rho = underlying_compositions(beta0, B, F);
    CHECK((rho.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    const MatrixXd shifted = underlying_compositions((beta0.array() + 37.0).matrix(), B, F);
    CHECK((shifted - rho).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXi none = Eigen::VectorXi::Zero(p);
    const VectorXd zi = zero_inflated_compositions(none, beta0, B, F.row(0).transpose());
    CHECK((zi - rho.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("zero_inflated_compositions examples") {
  VectorXd beta0 = VectorXd::Zero(3);
  MatrixXd B(3, 1);
  B << std::log(2.0), 0.0, 5.0;
  VectorXd f = VectorXd::Ones(1);
  Eigen::VectorXi z(3);
  z << 0, 0, 1;
  const VectorXd rho = zero_inflated_compositions(z, beta0, B, f);
  CHECK(rho(0) == doctest::Approx(2.0 / 3.0));
  CHECK(rho(1) == doctest::Approx(1.0 / 3.0));
  CHECK(rho(2) == 0.0);
  z << 1, 0, 1;
  CHECK(zero_inflated_compositions(z, beta0, B, f)(1) == 1.0);
  z << 1, 1, 1;
  CHECK_THROWS_AS(zero_inflated_compositions(z, beta0, B, f), DegenerateSupportError);
}
