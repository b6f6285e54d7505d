#include <cmath>
#include <numbers>

#include "zippca/elbo.hpp"
#include "zippca/rng.hpp"
#include "zippca/special_functions.hpp"

namespace zippca {

namespace {

constexpr double kMinVariance = 1e-8;

double log_normal_density(double v, double mean, double var) {
  const double d = v - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
}

double log_beta_density(double v, double a, double b) {
  return (a - 1.0) * std::log(v) + (b - 1.0) * std::log1p(-v) - log_beta(a, b);
}

// log of a Bernoulli(prob) mass at outcome, with 0 log 0 = 0 at the boundary.
double log_bernoulli(bool outcome, double prob) {
  const double mass = outcome ? prob : 1.0 - prob;
  return mass > 0.0 ? std::log(mass) : -INFINITY;
}

}  // namespace

MonteCarloEstimate mc_elbo_oracle(const CountMatrix& counts, const VariationalParams& delta,
                                  const VectorXd& beta0, const Hyperparams& hyper, long samples,
                                  std::uint64_t seed) {
  delta.validate(counts);
  if (samples < 1000) throw ValidationError("mc_elbo_oracle needs at least 1000 samples");
  if (beta0.size() != counts.taxa()) throw ValidationError("beta0 must have length p");
  const Index n = counts.samples();
  const Index p = counts.taxa();
  const Index k = delta.rank();
  const MatrixXd& x = counts.counts();

  // Per-row reference shift for exp() so S_i stays representable.
  VectorXd shift(n);
  for (Index i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (Index j = 0; j < p; ++j) {
      double mean_logit = beta0(j);
      for (Index l = 0; l < k; ++l) mean_logit += delta.m(i, l) * delta.r(j, l);
      mx = std::max(mx, mean_logit);
    }
    shift(i) = mx;
  }

  Rng rng(seed);
  MatrixXd beta(p, k), f(n, k);
  VectorXd eta(p);
  Eigen::MatrixXi z(n, p);

  // Online mean and co-moments of v = (h, S_1, ..., S_n).
  const Index dim = n + 1;
  VectorXd mean = VectorXd::Zero(dim);
  MatrixXd comoment = MatrixXd::Zero(dim, dim);
  VectorXd v(dim);

  for (long s = 0; s < samples; ++s) {
    double h = 0.0;
    for (Index j = 0; j < p; ++j) {
      double e = rng.beta(delta.gamma1(j), delta.gamma2(j));
      e = std::min(std::max(e, 1e-300), 1.0 - 1e-16);
      eta(j) = e;
      h += log_beta_density(e, hyper.alpha1, hyper.alpha2) -
           log_beta_density(e, delta.gamma1(j), delta.gamma2(j));
      for (Index l = 0; l < k; ++l) {
        const double var = std::max(delta.lambda2(j, l), kMinVariance);
        const double b = rng.normal(delta.r(j, l), std::sqrt(var));
        beta(j, l) = b;
        h += log_normal_density(b, 0.0, hyper.sigma_beta(l)) - log_normal_density(b, delta.r(j, l), var);
      }
    }
    for (Index i = 0; i < n; ++i) {
      for (Index l = 0; l < k; ++l) {
        const double var = std::max(delta.sigma2(i, l), kMinVariance);
        const double fv = rng.normal(delta.m(i, l), std::sqrt(var));
        f(i, l) = fv;
        h += log_normal_density(fv, 0.0, 1.0) - log_normal_density(fv, delta.m(i, l), var);
      }
      for (Index j = 0; j < p; ++j) {
        const bool zz = rng.bernoulli(delta.pi(i, j));
        z(i, j) = zz ? 1 : 0;
        h += (zz ? std::log(eta(j)) : std::log1p(-eta(j))) - log_bernoulli(zz, delta.pi(i, j));
      }
    }
    v(0) = 0.0;
    for (Index i = 0; i < n; ++i) {
      double row_s = 0.0;
      for (Index j = 0; j < p; ++j) {
        double logit = beta0(j);
        for (Index l = 0; l < k; ++l) logit += f(i, l) * beta(j, l);
        if (x(i, j) > 0.0) h += x(i, j) * logit;
        if (z(i, j) == 0) row_s += std::exp(logit - shift(i));
      }
      v(i + 1) = row_s;
    }
    v(0) = h;

    const double count = static_cast<double>(s + 1);
    const VectorXd d_old = v - mean;
    mean += d_old / count;
    comoment.noalias() += d_old * (v - mean).transpose();
  }

  const double N = static_cast<double>(samples);
  const MatrixXd cov = comoment / (N - 1.0);

  double estimate = mean(0);
  VectorXd grad = VectorXd::Zero(dim);
  grad(0) = 1.0;
  for (Index i = 0; i < n; ++i) {
    const double depth = counts.depths()(i);
    if (depth <= 0.0) continue;
    estimate -= depth * (shift(i) + std::log(mean(i + 1)));
    grad(i + 1) = -depth / mean(i + 1);
  }

  // Move from full log densities back to the constant-free scale of elbo_lpnm.
  double log_det_prior = 0.0;
  for (Index l = 0; l < k; ++l) log_det_prior += std::log(hyper.sigma_beta(l));
  estimate -= static_cast<double>(p) * (0.5 * static_cast<double>(k) - 0.5 * log_det_prior);
  estimate -= static_cast<double>(n) * 0.5 * static_cast<double>(k);

  MonteCarloEstimate out;
  out.mean = estimate;
  out.standard_error = std::sqrt(std::max(grad.dot(cov * grad), 0.0) / N);
  return out;
}

}  // namespace zippca
