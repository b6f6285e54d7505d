#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "zippca/elbo.hpp"
#include "zippca/optimizer.hpp"

namespace zippca {

inline constexpr double kVarianceLower = 1e-8;
inline constexpr double kVarianceUpper = 1.0 - 1e-8;
inline constexpr double kGammaLower = 1e-6;

/// The seven coordinate-ascent subproblems. Each BlockProblem is a pure
/// closure over a copy of the values it reads, so later edits to delta do not
/// affect a problem that has already been built.
///
/// Column blocks (gamma1, gamma2, r, lambda2) act on taxon j; row blocks
/// (m, sigma2) act on sample i; the intercept block is joint over all taxa.
/// Objectives equal elbo_lpnm restricted to the block, up to an additive
/// constant. Overloads taking L reuse a precomputed log_mgf_matrix(delta).
BlockProblem gamma1_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                          const Hyperparams& hyper);
BlockProblem gamma2_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                          const Hyperparams& hyper);

BlockProblem r_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                     const VectorXd& beta0, const Hyperparams& hyper);
BlockProblem r_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                     const VectorXd& beta0, const Hyperparams& hyper, const MatrixXd& L);

BlockProblem lambda2_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                           const VectorXd& beta0, const Hyperparams& hyper);
BlockProblem lambda2_block(Index j, const CountMatrix& counts, const VariationalParams& delta,
                           const VectorXd& beta0, const Hyperparams& hyper, const MatrixXd& L);

BlockProblem m_block(Index i, const CountMatrix& counts, const VariationalParams& delta,
                     const VectorXd& beta0, const Hyperparams& hyper);
BlockProblem sigma2_block(Index i, const CountMatrix& counts, const VariationalParams& delta,
                          const VectorXd& beta0, const Hyperparams& hyper);

BlockProblem beta0_block(const CountMatrix& counts, const VariationalParams& delta);
BlockProblem beta0_block(const CountMatrix& counts, const VariationalParams& delta, const MatrixXd& L);

enum class BlockKind { Gamma1, Gamma2, R, Lambda2, M, Sigma2, Beta0 };

inline constexpr std::array<BlockKind, 7> kAllBlocks = {
    BlockKind::Gamma1, BlockKind::Gamma2, BlockKind::R,    BlockKind::Lambda2,
    BlockKind::M,      BlockKind::Sigma2, BlockKind::Beta0};

std::string_view block_name(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);

// Whether the block is indexed by taxon (true) or sample (false); beta0 is neither.
bool is_column_block(BlockKind kind);

BlockProblem make_block(BlockKind kind, Index index, const CountMatrix& counts,
                        const VariationalParams& delta, const VectorXd& beta0, const Hyperparams& hyper);

// Current values of the block's variables, as the solver sees them.
VectorXd block_values(BlockKind kind, Index index, const VariationalParams& delta,
                      const VectorXd& beta0);

// Write a solver result back into delta / beta0.
void set_block_values(BlockKind kind, Index index, const VectorXd& values, VariationalParams& delta,
                      VectorXd& beta0);

/// A random dataset and a strictly feasible variational state for it, used
/// for gradient checks. Zero cells get fractional pi in (0.05, 0.95).
struct RandomState {
  CountMatrix counts;
  VariationalParams delta;
  VectorXd beta0;
  Hyperparams hyper;
};

RandomState random_feasible_state(Index n, Index p, int k, std::uint64_t seed);

}  // namespace zippca
