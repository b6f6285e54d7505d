#include "zippca/core_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace zippca {

namespace {

std::string join_indices(const std::vector<Index>& v) {
  std::ostringstream os;
  for (size_t a = 0; a < v.size(); ++a) os << (a ? "," : "") << v[a];
  return os.str();
}

}  // namespace

CountMatrix::CountMatrix(MatrixXd counts) : x_(std::move(counts)) {
  for (Index i = 0; i < x_.rows(); ++i) {
    for (Index j = 0; j < x_.cols(); ++j) {
      const double v = x_(i, j);
      if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
        std::ostringstream os;
        os << "count at (" << i << "," << j << ") is not a nonnegative integer";
        throw ValidationError(os.str());
      }
    }
  }
  depths_ = x_.rowwise().sum();
}

std::vector<Index> CountMatrix::empty_samples() const {
  std::vector<Index> out;
  for (Index i = 0; i < x_.rows(); ++i)
    if (depths_(i) <= 0.0) out.push_back(i);
  return out;
}

std::vector<Index> CountMatrix::empty_taxa() const {
  std::vector<Index> out;
  for (Index j = 0; j < x_.cols(); ++j)
    if (x_.col(j).sum() <= 0.0) out.push_back(j);
  return out;
}

void CountMatrix::require_support() const {
  if (x_.size() == 0) throw EmptySupportError("count matrix is empty");
  const auto rows = empty_samples();
  const auto cols = empty_taxa();
  if (rows.empty() && cols.empty()) return;
  std::ostringstream os;
  os << "zero-sum";
  if (!rows.empty()) os << " samples [" << join_indices(rows) << "]";
  if (!cols.empty()) os << " taxa [" << join_indices(cols) << "]";
  throw EmptySupportError(os.str());
}

Hyperparams Hyperparams::with_rank(int k) {
  Hyperparams h;
  h.k = k;
  h.sigma_beta = VectorXd::Ones(std::max(k, 0));
  return h;
}

void Hyperparams::validate(Index p) const {
  if (k < 1) throw ValidationError("rank k must be at least 1");
  if (p > 0 && k >= p) throw ValidationError("rank k must be smaller than the number of taxa");
  if (sigma_beta.size() != k) throw ValidationError("sigma_beta must have length k");
  if (!(sigma_beta.array() > 0.0).all() || !sigma_beta.allFinite())
    throw ValidationError("sigma_beta entries must be positive");
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !std::isfinite(alpha1) || !std::isfinite(alpha2))
    throw ValidationError("Beta prior parameters must be positive");
  if (!(pi0 > 0.0 && pi0 < 1.0)) throw ValidationError("pi0 must lie in (0,1)");
}

VectorXd alr(const VectorXd& rho) {
  const Index p = rho.size();
  if (p < 2) throw ValidationError("alr needs at least two parts");
  if (!(rho.array() > 0.0).all()) throw DomainError("alr: composition entries must be positive");
  if (std::abs(rho.sum() - 1.0) > 1e-12) throw ValidationError("alr: composition does not sum to 1");
  const double ref = std::log(rho(p - 1));
  VectorXd mu(p - 1);
  for (Index j = 0; j + 1 < p; ++j) mu(j) = std::log(rho(j)) - ref;
  return mu;
}

VectorXd alr_inv(const VectorXd& mu) {
  if (!mu.allFinite()) throw ValidationError("alr_inv: non-finite input");
  VectorXd logits(mu.size() + 1);
  logits.head(mu.size()) = mu;
  logits(mu.size()) = 0.0;
  const double lse = log_sum_exp(logits);
  return (logits.array() - lse).exp().matrix();
}

double log_sum_exp(const VectorXd& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

MatrixXd underlying_compositions(const VectorXd& beta0, const MatrixXd& B,
                                 const MatrixXd& F) {
  if (B.rows() != beta0.size() || F.cols() != B.cols())
    throw ValidationError("underlying_compositions: shape mismatch");
  MatrixXd logits = F * B.transpose();
  logits.rowwise() += beta0.transpose();
  MatrixXd rho(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    rho.row(i) = (e / e.sum()).matrix().transpose();
  }
  return rho;
}

VectorXd zero_inflated_compositions(const Eigen::VectorXi& z, const VectorXd& beta0,
                                    const MatrixXd& B, const VectorXd& f) {
  const Index p = beta0.size();
  if (z.size() != p || B.rows() != p || B.cols() != f.size())
    throw ValidationError("zero_inflated_compositions: shape mismatch");
  double mx = -std::numeric_limits<double>::infinity();
  VectorXd logits = beta0 + B * f;
  for (Index j = 0; j < p; ++j) {
    if (z(j) != 0 && z(j) != 1) throw ValidationError("z must be binary");
    if (z(j) == 0) mx = std::max(mx, logits(j));
  }
  if (!std::isfinite(mx)) throw DegenerateSupportError("every taxon is suppressed");
  VectorXd rho = VectorXd::Zero(p);
  double total = 0.0;
  for (Index j = 0; j < p; ++j) {
    if (z(j) == 0) {
      rho(j) = std::exp(logits(j) - mx);
      total += rho(j);
    }
  }
  return rho / total;
}

}  // namespace zippca
