#include <cmath>

#include "doctest.h"
#include "zippca/blocks.hpp"
#include "zippca/rng.hpp"
#include "zippca/special_functions.hpp"

using namespace zippca;

namespace {

Index block_range(BlockKind kind, Index n, Index p) {
  if (kind == BlockKind::Beta0) return 1;
  return is_column_block(kind) ? p : n;
}

double elbo_with(BlockKind kind, Index index, const VectorXd& values, const RandomState& st) {
  VariationalParams d = st.delta;
  VectorXd b0 = st.beta0;
  set_block_values(kind, index, values, d, b0);
  return elbo_lpnm(st.counts, d, b0, st.hyper).total;
}

// Random feasible move of a block's variables.
VectorXd perturb(const BlockProblem& prob, const VectorXd& x, Rng& rng) {
  VectorXd y = x;
  for (Index a = 0; a < y.size(); ++a) y(a) += 0.1 * rng.normal();
  if (prob.lower) y = y.cwiseMax(*prob.lower + VectorXd::Constant(y.size(), 1e-3));
  if (prob.upper) y = y.cwiseMin(*prob.upper - VectorXd::Constant(y.size(), 1e-3));
  return y;
}

}  // namespace

TEST_CASE("block names round trip") {
  for (BlockKind kind : kAllBlocks) CHECK(parse_block_kind(block_name(kind)) == kind);
  CHECK_THROWS_AS(parse_block_kind("delta"), ValidationError);
}

TEST_CASE("every block gradient matches central differences") {
  for (BlockKind kind : kAllBlocks) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const RandomState st = random_feasible_state(10, 15, 3, seed);
      const Index index = static_cast<Index>(seed) % block_range(kind, 10, 15);
      const BlockProblem prob = make_block(kind, index, st.counts, st.delta, st.beta0, st.hyper);
      worst = std::max(worst, grad_check(prob, block_values(kind, index, st.delta, st.beta0)));
    }
    INFO(block_name(kind));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("property: block objectives are the lower bound restricted to the block") {
  Rng rng(17);
  for (BlockKind kind : kAllBlocks) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const RandomState st = random_feasible_state(6, 9, 2, seed);
      const Index index = static_cast<Index>(seed) % block_range(kind, 6, 9);
      const BlockProblem prob = make_block(kind, index, st.counts, st.delta, st.beta0, st.hyper);
      const VectorXd x = block_values(kind, index, st.delta, st.beta0);
      const VectorXd y = perturb(prob, x, rng);
      const double block_change = prob.objective(y) - prob.objective(x);
      const double elbo_change = elbo_with(kind, index, y, st) - elbo_with(kind, index, x, st);
      INFO(block_name(kind));
      CHECK(std::abs(block_change - elbo_change) < 1e-8 * std::max(1.0, std::abs(elbo_change)) + 1e-9);
    }
  }
}

TEST_CASE("fused and separate evaluations agree") {
  const RandomState st = random_feasible_state(5, 8, 2, 3);
  for (BlockKind kind : kAllBlocks) {
    const BlockProblem prob = make_block(kind, 1 % block_range(kind, 5, 8), st.counts, st.delta, st.beta0, st.hyper);
    const VectorXd x = block_values(kind, 1 % block_range(kind, 5, 8), st.delta, st.beta0);
    if (!prob.value_and_gradient) continue;
    VectorXd g;
    const double v = prob.value_and_gradient(x, g);
    CHECK(v == doctest::Approx(prob.objective(x)).epsilon(1e-13));
    CHECK((g - prob.gradient(x)).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("overloads with a precomputed log-MGF grid agree") {
  const RandomState st = random_feasible_state(5, 8, 2, 8);
  const MatrixXd L = log_mgf_matrix(st.delta);
  const VectorXd r = st.delta.r.row(2).transpose();
  CHECK(r_block(2, st.counts, st.delta, st.beta0, st.hyper).objective(r) ==
        doctest::Approx(r_block(2, st.counts, st.delta, st.beta0, st.hyper, L).objective(r)));
  const VectorXd a = st.delta.lambda2.row(2).transpose();
  CHECK(lambda2_block(2, st.counts, st.delta, st.beta0, st.hyper).objective(a) ==
        doctest::Approx(lambda2_block(2, st.counts, st.delta, st.beta0, st.hyper, L).objective(a)));
  CHECK(beta0_block(st.counts, st.delta).objective(st.beta0) ==
        doctest::Approx(beta0_block(st.counts, st.delta, L).objective(st.beta0)));
}

TEST_CASE("m gradient without variance equals the softmax transcription") {
  RandomState st = random_feasible_state(4, 6, 2, 12);
  st.delta.pi.setZero();
  st.delta.lambda2.setConstant(1e-300);
  st.delta.sigma2.setConstant(1e-300);
  const Index i = 1;
  const VectorXd m = st.delta.m.row(i).transpose();
  VectorXd want = -m;
  VectorXd logits(6);
  for (Index j = 0; j < 6; ++j) {
    want += st.counts(i, j) * st.delta.r.row(j).transpose();
    logits(j) = st.beta0(j) + m.dot(st.delta.r.row(j));
  }
  const VectorXd w = (logits.array() - logits.maxCoeff()).exp();
  VectorXd weighted = VectorXd::Zero(2);
  for (Index j = 0; j < 6; ++j) weighted += w(j) / w.sum() * st.delta.r.row(j).transpose();
  want -= st.counts.depths()(i) * weighted;
  const VectorXd got = m_block(i, st.counts, st.delta, st.beta0, st.hyper).gradient(m);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("r gradient without variance equals the softmax transcription") {
  RandomState st = random_feasible_state(4, 6, 2, 14);
  st.delta.pi.setZero();
  st.delta.lambda2.setConstant(1e-300);
  st.delta.sigma2.setConstant(1e-300);
  const Index j = 3;
  const VectorXd r = st.delta.r.row(j).transpose();
  VectorXd want = -(r.array() / st.hyper.sigma_beta.array()).matrix();
  for (Index i = 0; i < 4; ++i) {
    VectorXd logits(6);
    for (Index l = 0; l < 6; ++l) logits(l) = st.beta0(l) + st.delta.m.row(i).dot(st.delta.r.row(l));
    const VectorXd w = (logits.array() - logits.maxCoeff()).exp();
    const VectorXd m = st.delta.m.row(i).transpose();
    want += (st.counts(i, j) - st.counts.depths()(i) * w(j) / w.sum()) * m;
  }
  const VectorXd got = r_block(j, st.counts, st.delta, st.beta0, st.hyper).gradient(r);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gamma gradients match the displayed scalar formula") {
  const RandomState st = random_feasible_state(6, 5, 2, 30);
  const Index j = 2;
  double pi_sum = 0.0;
  for (Index i = 0; i < 6; ++i) pi_sum += st.delta.pi(i, j);
  const double keep_sum = 6.0 - pi_sum;
  const double g1 = st.delta.gamma1(j), g2 = st.delta.gamma2(j);
  const double a1 = st.hyper.alpha1, a2 = st.hyper.alpha2;
  const double t1 = trigamma(g1), t2 = trigamma(g2), t12 = trigamma(g1 + g2);
  const double want1 = (pi_sum + a1 - g1) * (t1 - t12) - (keep_sum + a2 - g2) * t12;
  const double want2 = (keep_sum + a2 - g2) * (t2 - t12) - (pi_sum + a1 - g1) * t12;
  CHECK(gamma1_block(j, st.counts, st.delta, st.hyper).gradient(VectorXd::Constant(1, g1))(0) ==
        doctest::Approx(want1).epsilon(1e-12));
  CHECK(gamma2_block(j, st.counts, st.delta, st.hyper).gradient(VectorXd::Constant(1, g2))(0) ==
        doctest::Approx(want2).epsilon(1e-12));
  // Both gradients vanish at the conjugate update.
  VariationalParams d = st.delta;
  d.gamma1(j) = a1 + pi_sum;
  d.gamma2(j) = a2 + keep_sum;
  CHECK(std::abs(gamma1_block(j, st.counts, d, st.hyper).gradient(d.gamma1.segment(j, 1))(0)) < 1e-12);
  CHECK(std::abs(gamma2_block(j, st.counts, d, st.hyper).gradient(d.gamma2.segment(j, 1))(0)) < 1e-12);
}

TEST_CASE("variance blocks reduce to their prior without data") {
  RandomState st = random_feasible_state(3, 4, 2, 5);
  const CountMatrix empty(MatrixXd::Zero(3, 4));
  st.delta.pi.setConstant(0.5);
  st.hyper.sigma_beta << 0.3, 4.0;
  const BlockProblem lam = lambda2_block(1, empty, st.delta, st.beta0, st.hyper);
  const OptimizerReport rl = bounded_quasi_newton(lam, VectorXd::Constant(2, 0.5), 1e-10);
  CHECK(rl.solution(0) == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(rl.solution(1) == doctest::Approx(1.0 - 1e-8));
  const BlockProblem sig = sigma2_block(0, empty, st.delta, st.beta0, st.hyper);
  const OptimizerReport rs = bounded_quasi_newton(sig, VectorXd::Constant(2, 0.5), 1e-10);
  CHECK((rs.solution.array() - (1.0 - 1e-8)).abs().maxCoeff() < 1e-12);
  const BlockProblem mean = m_block(0, empty, st.delta, st.beta0, st.hyper);
  CHECK(bounded_quasi_newton(mean, VectorXd::Constant(2, 0.7), 1e-10).solution.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("intercept optimum matches observed column totals") {
  const RandomState st = random_feasible_state(6, 7, 2, 44);
  const BlockProblem prob = beta0_block(st.counts, st.delta);
  const OptimizerReport rep = bounded_quasi_newton(prob, st.beta0, 1e-10, 500);
  const MatrixXd L = log_mgf_matrix(st.delta);
  const VectorXd logS = log_normalizers(st.delta, rep.solution, L);
  for (Index j = 0; j < 7; ++j) {
    double expected = 0.0;
    for (Index i = 0; i < 6; ++i)
      expected += st.counts.depths()(i) * (1 - st.delta.pi(i, j)) * std::exp(rep.solution(j) + L(i, j) - logS(i));
    CHECK(std::abs(expected - st.counts.counts().col(j).sum()) < 1e-6 * st.counts.counts().sum());
  }
  const VectorXd shifted = (st.beta0.array() + 2.5).matrix();
  CHECK(prob.objective(shifted) == doctest::Approx(prob.objective(st.beta0)).epsilon(1e-12));
}

TEST_CASE("property: one solver call never lowers the lower bound") {
  for (BlockKind kind : kAllBlocks) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const RandomState st = random_feasible_state(6, 9, 2, 100 + seed);
      const Index index = static_cast<Index>(seed) % block_range(kind, 6, 9);
      const BlockProblem prob = make_block(kind, index, st.counts, st.delta, st.beta0, st.hyper);
      const VectorXd x = block_values(kind, index, st.delta, st.beta0);
      const OptimizerReport rep = bounded_quasi_newton(prob, x);
      CHECK(rep.objective_value >= prob.objective(x));
      CHECK(prob.feasible(rep.solution));
      INFO(block_name(kind));
      CHECK(elbo_with(kind, index, rep.solution, st) >= elbo_with(kind, index, x, st) - 1e-8);
    }
  }
}

TEST_CASE("block builders validate their inputs") {
  const RandomState st = random_feasible_state(3, 4, 2, 1);
  CHECK_THROWS_AS(r_block(4, st.counts, st.delta, st.beta0, st.hyper), ValidationError);
  CHECK_THROWS_AS(m_block(-1, st.counts, st.delta, st.beta0, st.hyper), ValidationError);
  RandomState singular = st;
  singular.delta.lambda2(0, 0) = 1.0;
  CHECK_THROWS(r_block(0, singular.counts, singular.delta, singular.beta0, singular.hyper));
}
