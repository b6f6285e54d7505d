#pragma once

#include <Eigen/Dense>
#include <vector>

#include "zippca/errors.hpp"

namespace zippca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// n x p table of read counts with per-sample sequencing depths.
///
/// Entries must be nonnegative integers. Depths are the row sums. Empty
/// rows/columns are representable (block-level code handles M_i = 0) but a
/// dataset must pass require_support() before it can be fitted.
class CountMatrix {
 public:
  CountMatrix() = default;
  explicit CountMatrix(MatrixXd counts);

  Index samples() const { return x_.rows(); }
  Index taxa() const { return x_.cols(); }
  const MatrixXd& counts() const { return x_; }
  const VectorXd& depths() const { return depths_; }
  double operator()(Index i, Index j) const { return x_(i, j); }

  std::vector<Index> empty_samples() const;
  std::vector<Index> empty_taxa() const;

  // Throws ValidationError naming zero-sum rows and columns.
  void require_support() const;

 private:
  MatrixXd x_;
  VectorXd depths_;
};

struct Hyperparams {
  int k = 2;
  VectorXd sigma_beta;  // diagonal of the loading prior covariance, length k
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double pi0 = 0.5;

  // Standard-normal loading prior and a uniform Beta(1,1) on eta.
  static Hyperparams with_rank(int k);

  // Throws ValidationError; p is the number of taxa it will be paired with.
  void validate(Index p) const;
};

struct ModelParams {
  VectorXd beta0;  // p intercepts
  MatrixXd B;      // p x k loadings
  VectorXd eta;    // p zero-inflation probabilities
};

struct LatentState {
  MatrixXd F;  // n x k factors
  Eigen::MatrixXi Z;  // n x p structural-zero indicators
};

// Additive log-ratio transform with the last component as reference.
VectorXd alr(const VectorXd& rho);
VectorXd alr_inv(const VectorXd& mu);

// Numerically stable log(sum(exp(v))). Returns -inf for an empty input.
double log_sum_exp(const VectorXd& v);

// Row-wise softmax of beta0_j + f_i' beta_j.
MatrixXd underlying_compositions(const VectorXd& beta0, const MatrixXd& B,
                                 const MatrixXd& F);

// Softmax restricted to taxa with z_j = 0; suppressed taxa get exactly 0.
VectorXd zero_inflated_compositions(const Eigen::VectorXi& z,
                                    const VectorXd& beta0, const MatrixXd& B,
                                    const VectorXd& f);

}  // namespace zippca
