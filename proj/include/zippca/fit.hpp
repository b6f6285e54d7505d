#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "zippca/elbo.hpp"

namespace zippca {

struct FitOptions {
  int max_outer_iter = 200;
  double elbo_rel_tol = 1e-6;
  std::uint64_t seed = 1;
  bool jacobi_parallel = false;  // solve column/row blocks from a frozen snapshot
  unsigned threads = 0;          // Jacobi workers; 0 means all cores
  double block_tol = 1e-6;
  int block_max_iter = 200;

  void validate() const;
};

struct FitResult {
  ModelParams theta_hat;
  VariationalParams delta_hat;
  MatrixXd rho_hat;  // n x p, rows sum to 1
  MatrixXd F_hat;    // n x k
  // ELBO after the intercept step of each outer iteration.
  std::vector<double> elbo_trace;
  // ELBO right after classification, before that iteration's block sweeps.
  std::vector<double> sweep_start_elbo;
  int outer_iterations = 0;
  bool converged = false;
};

/// Starting point: column log relative abundances for the intercepts, a
/// rank-k SVD of the centered log(1 + x) table for the means, variances at
/// 0.5, and gamma from the column zero counts. Deterministic in its inputs.
std::pair<VariationalParams, VectorXd> initialize(const CountMatrix& counts, const Hyperparams& hyper,
                                                  std::uint64_t seed);

// 1 where pi_hat >= pi0, 0 elsewhere.
MatrixXd classify_pi(const MatrixXd& pi_hat_grid, double pi0);

VectorXd estimate_eta(const VectorXd& gamma1, const VectorXd& gamma2);

/// Classification variational approximation. Each outer iteration classifies
/// pi, sweeps the taxon blocks (gamma1, gamma2, r, lambda2 for j = 0..p-1)
/// and the sample blocks (m, sigma2 for i = 0..n-1), then updates and
/// centers the intercepts. Stops once the relative ELBO change drops below
/// elbo_rel_tol. Throws NumericalError if the ELBO becomes non-finite.
FitResult fit(const CountMatrix& counts, const Hyperparams& hyper, const FitOptions& opts = {});

}  // namespace zippca
