#include <cmath>

#include "doctest.h"
#include "support/oracles.hpp"
#include "zippca/blocks.hpp"
#include "zippca/elbo.hpp"
#include "zippca/special_functions.hpp"

using namespace zippca;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index a = 0;
  for (double x : v) out(a++) = x;
  return out;
}

}  // namespace

TEST_CASE("log_mgf_term closed-form examples") {
  // Boundary limit: deterministic factors.
  CHECK(log_mgf_term(vec({1.0, 2.0}), vec({0.0, 0.0}), vec({0.5, -1.0}), vec({0.0, 0.0})) ==
        doctest::Approx(-1.5));
  CHECK(log_mgf_term(vec({0.0, 0.0}), vec({0.4, 0.5}), vec({0.0, 0.0}), vec({0.5, 0.8})) ==
        doctest::Approx(-0.5 * (std::log(1 - 0.2) + std::log(1 - 0.4))));
  // Reference from adaptive quadrature of E[exp(uv)], u, v ~ N(1, 0.5).
  CHECK(log_mgf_term(vec({1.0}), vec({0.5}), vec({1.0}), vec({0.5})) ==
        doctest::Approx(2.1438410362258904637).epsilon(1e-12));
  CHECK_THROWS_AS(log_mgf_term(vec({1.0}), vec({1.0}), vec({1.0}), vec({1.0})), SingularityError);
}

TEST_CASE("log_mgf_term matches the matrix display") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomState st = random_feasible_state(3, 5, 3, seed);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 5; ++j) {
        const VectorXd m = st.delta.m.row(i).transpose(), s = st.delta.sigma2.row(i).transpose();
        const VectorXd r = st.delta.r.row(j).transpose(), l = st.delta.lambda2.row(j).transpose();
        CHECK(std::abs(log_mgf_term(m, s, r, l) - oracle::log_mgf(m, s, r, l)) < 1e-12);
        CHECK(log_mgf_entry(st.delta, i, j) == log_mgf_term(m, s, r, l));
      }
  }
}

TEST_CASE("elbo_lpnm matches the scalar-loop transcription") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomState st = random_feasible_state(3 + seed % 3, 5, 2, seed);
    const ElboBreakdown e = elbo_lpnm(st.counts, st.delta, st.beta0, st.hyper);
    const double want = oracle::elbo(st.counts, st.delta, st.beta0, st.hyper);
    CHECK(std::abs(e.total - want) < 1e-9 * std::max(1.0, std::abs(want)));
    const double parts =
        e.loading_prior + e.factor_prior + e.beta_functions + e.multinomial + e.bernoulli + e.beta_cross;
    CHECK(std::abs(parts - e.total) < 1e-10 * std::max(1.0, std::abs(e.total)));
  }
}

TEST_CASE("elbo_lpnm boundary conventions and errors") {
  RandomState st = random_feasible_state(3, 5, 2, 4);
  for (Index a = 0; a < st.delta.pi.size(); ++a)
    if (st.delta.pi.data()[a] > 0.0) st.delta.pi.data()[a] = 1.0;
  const double total = elbo_lpnm(st.counts, st.delta, st.beta0, st.hyper).total;
  CHECK(std::isfinite(total));
  CHECK(std::abs(total - oracle::elbo(st.counts, st.delta, st.beta0, st.hyper)) < 1e-9 * std::abs(total));

  RandomState bad = random_feasible_state(2, 4, 1, 2);
  Index row = 0, col = 0;
  bad.counts.counts().maxCoeff(&row, &col);
  bad.delta.pi(row, col) = 0.5;
  CHECK_THROWS_AS(elbo_lpnm(bad.counts, bad.delta, bad.beta0, bad.hyper), ValidationError);
  RandomState shape = random_feasible_state(2, 4, 1, 3);
  shape.beta0.resize(3);
  CHECK_THROWS_AS(elbo_lpnm(shape.counts, shape.delta, shape.beta0, shape.hyper), ValidationError);
}

TEST_CASE("all taxa suppressed in a row is degenerate") {
  RandomState st = random_feasible_state(1, 3, 1, 1);
  st.delta.pi = MatrixXd::Ones(1, 3);
  CHECK_THROWS_AS(log_normalizers(st.delta, st.beta0, log_mgf_matrix(st.delta)), DegenerateSupportError);
}

TEST_CASE("alpha0_hat examples and stationarity") {
  MatrixXd x(1, 4);
  x << 3, 0, 5, 2;
  const CountMatrix counts(x);
  VariationalParams d;
  d.pi = MatrixXd::Zero(1, 4);
  d.r = MatrixXd::Zero(4, 1);
  d.lambda2 = MatrixXd::Constant(4, 1, 1e-12);
  d.m = MatrixXd::Zero(1, 1);
  d.sigma2 = MatrixXd::Constant(1, 1, 1e-12);
  d.gamma1 = VectorXd::Ones(4);
  d.gamma2 = VectorXd::Ones(4);
  CHECK(alpha0_hat(counts, d, VectorXd::Zero(4), 0) == doctest::Approx(std::log(10.0 / 4.0)));
  const CountMatrix doubled(2.0 * x);
  CHECK(alpha0_hat(doubled, d, VectorXd::Zero(4), 0) - alpha0_hat(counts, d, VectorXd::Zero(4), 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RandomState st = random_feasible_state(4, 6, 2, seed);
    for (Index i = 0; i < 4; ++i) {
      const double a0 = alpha0_hat(st.counts, st.delta, st.beta0, i);
      double deriv = 0.0;
      for (Index j = 0; j < 6; ++j)
        deriv += (1 - st.delta.pi(i, j)) *
                 (st.counts(i, j) - std::exp(a0 + st.beta0(j) + log_mgf_entry(st.delta, i, j)));
      CHECK(std::abs(deriv) < 1e-8 * st.counts.depths()(i));
    }
  }
}

TEST_CASE("pi_hat examples and monotonicity") {
  CHECK(pi_hat_cell(1.0, 1.0, std::log(std::log(2.0))) == doctest::Approx(1.0 / 1.5));
  CHECK(pi_hat_cell(1.0, 1.0, 800.0) == doctest::Approx(1.0));
  double prev = 0.0;
  for (double e = -10; e <= 10; e += 0.25) {
    const double v = pi_hat_cell(2.0, 3.0, e);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(pi_hat_cell(3.0, 2.0, 0.1) > pi_hat_cell(2.0, 2.0, 0.1));

  const RandomState st = random_feasible_state(4, 6, 2, 7);
  const MatrixXd grid = pi_hat(st.counts, st.delta, st.beta0);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 6; ++j) {
      if (st.counts(i, j) > 0) {
        CHECK(grid(i, j) == 0.0);
      } else {
        const double e = alpha0_hat(st.counts, st.delta, st.beta0, i) + st.beta0(j) + log_mgf_entry(st.delta, i, j);
        const double a = std::exp(digamma(st.delta.gamma1(j)));
        const double b = std::exp(digamma(st.delta.gamma2(j))) * std::exp(-std::exp(e));
        CHECK(grid(i, j) == doctest::Approx(a / (a + b)).epsilon(1e-12));
      }
    }
}

TEST_CASE("elbo_poisson matches its scalar-loop transcription") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RandomState st = random_feasible_state(2, 3, 1, seed);
    VectorXd alpha0(2);
    alpha0 << 0.3 * static_cast<double>(seed), -1.0;
    const double got = elbo_poisson(st.counts, st.delta, st.beta0, alpha0, st.hyper);
    const double want = oracle::elbo_poisson(st.counts, st.delta, st.beta0, alpha0, st.hyper);
    CHECK(std::abs(got - want) < 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("Poisson equivalence with the profiled offset") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomState st = random_feasible_state(4, 7, 2, seed);
    const double lpnm = elbo_lpnm(st.counts, st.delta, st.beta0, st.hyper).total;
    const VectorXd a0 = alpha0_hat_all(st.counts, st.delta, st.beta0);
    double constant = 0.0;
    for (Index i = 0; i < 4; ++i) {
      const double depth = st.counts.depths()(i);
      constant += depth;
      for (Index j = 0; j < 7; ++j)
        constant -= st.counts(i, j) * std::log(depth) - std::lgamma(st.counts(i, j) + 1.0);
    }
    const double poisson = elbo_poisson(st.counts, st.delta, st.beta0, a0, st.hyper);
    CHECK(std::abs(poisson + constant - lpnm) / std::abs(lpnm) < 1e-8);
    // The profiled offset maximizes the Poisson bound.
    VectorXd moved = a0;
    moved(0) += 1e-3;
    CHECK(elbo_poisson(st.counts, st.delta, st.beta0, moved, st.hyper) < poisson);
  }
}

TEST_CASE("empty likelihood leaves only prior and entropy terms") {
  RandomState st = random_feasible_state(2, 3, 1, 9);
  const CountMatrix empty(MatrixXd::Zero(2, 3));
  st.delta.pi = MatrixXd::Ones(2, 3);
  const double full = elbo_poisson(empty, st.delta, st.beta0, VectorXd::Zero(2), st.hyper);
  st.beta0.setConstant(40.0);
  CHECK(elbo_poisson(empty, st.delta, st.beta0, VectorXd::Constant(2, 3.0), st.hyper) == doctest::Approx(full));
}

TEST_CASE("Monte-Carlo oracle agrees and its error shrinks like one over root n") {
  // Variances kept small enough for the sampled normalizer to have finite variance.
  RandomState st = random_feasible_state(3, 5, 2, 21);
  st.delta.lambda2 = (st.delta.lambda2 * 0.45).eval();
  st.delta.sigma2 = (st.delta.sigma2 * 0.45).eval();
  const double exact = elbo_lpnm(st.counts, st.delta, st.beta0, st.hyper).total;
  const MonteCarloEstimate mc = mc_elbo_oracle(st.counts, st.delta, st.beta0, st.hyper, 40000, 5);
  CHECK(std::abs(mc.mean - exact) < 3.0 * mc.standard_error);
  const MonteCarloEstimate small = mc_elbo_oracle(st.counts, st.delta, st.beta0, st.hyper, 10000, 6);
  CHECK(small.standard_error / mc.standard_error == doctest::Approx(2.0).epsilon(0.2));
  CHECK_THROWS_AS(mc_elbo_oracle(st.counts, st.delta, st.beta0, st.hyper, 10, 1), ValidationError);
}

TEST_CASE("lower bound never exceeds the log evidence on a tiny instance") {
  MatrixXd x(2, 3);
  x << 2, 0, 3, 1, 1, 0;
  const CountMatrix counts(x);
  RandomState st = random_feasible_state(2, 3, 1, 13);
  st.hyper.sigma_beta(0) = 1.0;
  st.delta.pi = MatrixXd::Zero(2, 3);
  st.delta.pi(0, 1) = 0.3;
  st.delta.pi(1, 2) = 0.6;
  const double bound = elbo_lpnm(counts, st.delta, st.beta0, st.hyper).total +
                       elbo_dropped_constant(counts, st.hyper, 3);
  const double evidence = oracle::log_evidence_rank_one(counts, st.beta0, st.hyper, 24);
  CHECK(bound <= evidence + 1e-6);
}
