#pragma once

#include <cstdint>

#include "zippca/core_model.hpp"

namespace zippca {

/// Mean-field variational parameters.
///
///   q(z_ij)   = Bern(pi_ij)
///   q(beta_j) = N(r_j, diag(lambda2_j))
///   q(f_i)    = N(m_i, diag(sigma2_i))
///   q(eta_j)  = Beta(gamma1_j, gamma2_j)
struct VariationalParams {
  MatrixXd pi;       // n x p
  MatrixXd r;        // p x k
  MatrixXd lambda2;  // p x k, entries in (0,1)
  MatrixXd m;        // n x k
  MatrixXd sigma2;   // n x k, entries in (0,1)
  VectorXd gamma1;   // p
  VectorXd gamma2;   // p

  Index samples() const { return m.rows(); }
  Index taxa() const { return r.rows(); }
  Index rank() const { return r.cols(); }

  // Shapes, ranges, and pi_ij = 0 wherever x_ij > 0.
  void validate(const CountMatrix& counts) const;
};

/// Additive pieces of the lower bound; total is their sum.
struct ElboBreakdown {
  double loading_prior = 0.0;  // -1/2 sum_j {tr(Sb^-1 (r r' + Lambda)) - log|Lambda|}
  double factor_prior = 0.0;   // -1/2 sum_i {tr(m m' + Sigma) - log|Sigma|}
  double beta_functions = 0.0; // sum_j log B(g1,g2) - p log B(a1,a2)
  double multinomial = 0.0;    // sum x(b0 + m'r) - sum_i M_i log S_i
  double bernoulli = 0.0;      // q(z) cross-entropy and entropy terms
  double beta_cross = 0.0;     // (alpha - gamma) digamma terms
  double total = 0.0;
};

/// log E[exp(f' beta)] for independent f ~ N(m, diag(sigma2)),
/// beta ~ N(r, diag(lambda2)). Throws SingularityError if any
/// sigma2_l * lambda2_l >= 1.
double log_mgf_term(const VectorXd& m, const VectorXd& sigma2, const VectorXd& r,
                    const VectorXd& lambda2);

// log_mgf_term for sample i and taxon j of delta, without copying rows.
double log_mgf_entry(const VariationalParams& delta, Index i, Index j);

// n x p grid of log_mgf_term values.
MatrixXd log_mgf_matrix(const VariationalParams& delta);

// log S_i = log sum_j (1 - pi_ij) exp(beta0_j + L_ij), one entry per sample.
// Throws DegenerateSupportError if some row has every pi_ij = 1.
VectorXd log_normalizers(const VariationalParams& delta, const VectorXd& beta0,
                         const MatrixXd& L);

ElboBreakdown elbo_lpnm(const CountMatrix& counts, const VariationalParams& delta,
                        const VectorXd& beta0, const Hyperparams& hyper);

/// Constants dropped from elbo_lpnm: the multinomial coefficients, the Gaussian
/// entropy k/2 terms, and -1/2 log|Sigma_beta|. elbo_lpnm + this is the exact
/// evidence lower bound.
double elbo_dropped_constant(const CountMatrix& counts, const Hyperparams& hyper,
                             Index p);

// Profiled Poisson offset: log(M_i / S_i).
double alpha0_hat(const CountMatrix& counts, const VariationalParams& delta,
                  const VectorXd& beta0, Index i);
VectorXd alpha0_hat_all(const CountMatrix& counts, const VariationalParams& delta,
                        const VectorXd& beta0);

// Closed-form q(z) mean for a zero cell, with exponent = alpha_i0 + beta0_j + L_ij.
double pi_hat_cell(double gamma1, double gamma2, double exponent);

// n x p grid; exactly 0 wherever x_ij > 0.
MatrixXd pi_hat(const CountMatrix& counts, const VariationalParams& delta,
                const VectorXd& beta0);

/// Lower bound of the equivalent zero-inflated Poisson factor model at
/// per-sample offsets alpha0. Likelihood terms are weighted by (1 - pi_ij).
double elbo_poisson(const CountMatrix& counts, const VariationalParams& delta,
                    const VectorXd& beta0, const VectorXd& alpha0,
                    const Hyperparams& hyper);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Direct Monte-Carlo estimate of the lower bound by sampling every latent
/// block from q. Shares no code with elbo_lpnm. The log-normalizer term
/// -M_i log E_q[S_i] is estimated as a ratio, with a delta-method standard
/// error; all other terms are plain sample means. Reported on the same
/// constant-free scale as elbo_lpnm.
MonteCarloEstimate mc_elbo_oracle(const CountMatrix& counts, const VariationalParams& delta,
                                  const VectorXd& beta0, const Hyperparams& hyper,
                                  long samples, std::uint64_t seed);

}  // namespace zippca
