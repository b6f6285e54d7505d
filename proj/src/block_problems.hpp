#pragma once

// Unchecked block builders shared by the public block API and the fitter.
// Callers guarantee valid shapes and indices.

#include "zippca/blocks.hpp"

namespace zippca::detail {

// log sum over taxa t != j of (1 - pi_it) exp(beta0_t + L_it), per sample.
VectorXd column_log_rest(Index j, const VariationalParams& delta, const VectorXd& beta0, const MatrixXd& L);

BlockProblem gamma1_problem(Index j, const VariationalParams& delta, const Hyperparams& hyper);
BlockProblem gamma2_problem(Index j, const VariationalParams& delta, const Hyperparams& hyper);
BlockProblem r_problem(Index j, const CountMatrix& counts, const VariationalParams& delta,
                       const VectorXd& beta0, const Hyperparams& hyper, VectorXd log_rest);
BlockProblem lambda2_problem(Index j, const CountMatrix& counts, const VariationalParams& delta,
                             const VectorXd& beta0, const Hyperparams& hyper, VectorXd log_rest);
BlockProblem m_problem(Index i, const CountMatrix& counts, const VariationalParams& delta,
                       const VectorXd& beta0);
BlockProblem sigma2_problem(Index i, const CountMatrix& counts, const VariationalParams& delta,
                            const VectorXd& beta0);
BlockProblem beta0_problem(const CountMatrix& counts, const VariationalParams& delta, const MatrixXd& L);

}  // namespace zippca::detail
