#include "zippca/fit.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "block_problems.hpp"
#include "zippca/blocks.hpp"
#include "zippca/optimizer.hpp"
#include "zippca/parallel.hpp"

namespace zippca {

void FitOptions::validate() const {
  if (max_outer_iter < 1) throw ValidationError("max_outer_iter must be at least 1");
  if (!(elbo_rel_tol > 0.0)) throw ValidationError("elbo_rel_tol must be positive");
  if (!(block_tol > 0.0)) throw ValidationError("block_tol must be positive");
  if (block_max_iter < 1) throw ValidationError("block_max_iter must be at least 1");
}

std::pair<VariationalParams, VectorXd> initialize(const CountMatrix& counts, const Hyperparams& hyper,
                                                  std::uint64_t /*seed*/) {
  const Index n = counts.samples();
  const Index p = counts.taxa();
  hyper.validate(p);
  const Index k = hyper.k;
  const MatrixXd& x = counts.counts();

  VectorXd beta0(p);
  const VectorXd col = x.colwise().sum().transpose().array() + 0.5;
  beta0 = (col / col.sum()).array().log();
  beta0.array() -= beta0.mean();

  MatrixXd y = x.unaryExpr([](double v) { return std::log1p(v); });
  y.rowwise() -= y.colwise().mean();

  VariationalParams d;
  d.m = MatrixXd::Zero(n, k);
  d.r = MatrixXd::Zero(p, k);
  if (y.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::BDCSVD<MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index rank = std::min<Index>(k, svd.singularValues().size());
    const double root_n = std::sqrt(static_cast<double>(n));
    for (Index l = 0; l < rank; ++l) {
      const double sv = svd.singularValues()(l);
      if (!(sv > 1e-12)) continue;
      VectorXd u = svd.matrixU().col(l);
      VectorXd v = svd.matrixV().col(l);
      // Fix the sign so the largest loading is positive.
      Index at = 0;
      v.cwiseAbs().maxCoeff(&at);
      if (v(at) < 0.0) {
        u = -u;
        v = -v;
      }
      d.m.col(l) = root_n * u;
      d.r.col(l) = (sv / root_n) * v;
    }
  }
  d.lambda2 = MatrixXd::Constant(p, k, 0.5);
  d.sigma2 = MatrixXd::Constant(n, k, 0.5);
  d.pi = MatrixXd::Zero(n, p);
  d.gamma1.resize(p);
  d.gamma2.resize(p);
  for (Index j = 0; j < p; ++j) {
    double zeros = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (x(i, j) == 0.0) {
        zeros += 1.0;
        d.pi(i, j) = 0.5;
      }
    }
    d.gamma1(j) = hyper.alpha1 + zeros;
    d.gamma2(j) = hyper.alpha2 + (static_cast<double>(n) - zeros);
  }
  return {std::move(d), std::move(beta0)};
}

MatrixXd classify_pi(const MatrixXd& pi_hat_grid, double pi0) {
  MatrixXd out(pi_hat_grid.rows(), pi_hat_grid.cols());
  for (Index a = 0; a < pi_hat_grid.size(); ++a) {
    const double v = pi_hat_grid.data()[a];
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("classify_pi: entries must lie in [0,1]");
    out.data()[a] = v >= pi0 ? 1.0 : 0.0;
  }
  return out;
}

VectorXd estimate_eta(const VectorXd& gamma1, const VectorXd& gamma2) {
  if (gamma1.size() != gamma2.size()) throw ValidationError("estimate_eta: length mismatch");
  if (!(gamma1.array() > 0.0).all() || !(gamma2.array() > 0.0).all())
    throw ValidationError("estimate_eta: gamma must be positive");
  return (gamma1.array() / (gamma1.array() + gamma2.array())).matrix();
}

namespace {

void refresh_column(Index j, const VariationalParams& d, MatrixXd& L) {
  for (Index i = 0; i < d.samples(); ++i) L(i, j) = log_mgf_entry(d, i, j);
}

void refresh_row(Index i, const VariationalParams& d, MatrixXd& L) {
  for (Index j = 0; j < d.taxa(); ++j) L(i, j) = log_mgf_entry(d, i, j);
}

// Per-sample sums sum_t (1 - pi_it) exp(beta0_t + L_it - shift_i), kept up
// to date as single columns change so a column block can read the
// normalizer share of the other taxa in O(n).
class RowSums {
 public:
  void rebuild(const VariationalParams& d, const VectorXd& beta0, const MatrixXd& L) {
    shift_.resize(L.rows());
    sum_.resize(L.rows());
    for (Index i = 0; i < L.rows(); ++i) rebuild_row(i, d, beta0, L);
  }

  void rebuild_row(Index i, const VariationalParams& d, const VectorXd& beta0, const MatrixXd& L) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index t = 0; t < L.cols(); ++t)
      if (d.pi(i, t) < 1.0) mx = std::max(mx, beta0(t) + L(i, t));
    shift_(i) = std::isfinite(mx) ? mx : 0.0;
    double acc = 0.0;
    for (Index t = 0; t < L.cols(); ++t) acc += term(i, t, d, beta0, L);
    sum_(i) = acc;
  }

  double term(Index i, Index j, const VariationalParams& d, const VectorXd& beta0, const MatrixXd& L) const {
    const double keep = 1.0 - d.pi(i, j);
    return keep > 0.0 ? keep * std::exp(beta0(j) + L(i, j) - shift_(i)) : 0.0;
  }

  VectorXd log_rest(Index j, const VariationalParams& d, const VectorXd& beta0, const MatrixXd& L) const {
    const Index n = L.rows();
    VectorXd out(n);
    for (Index i = 0; i < n; ++i) {
      const double rest = sum_(i) - term(i, j, d, beta0, L);
      if (rest > 1e-6 * sum_(i)) {
        out(i) = shift_(i) + std::log(rest);
      } else {
        // Taxon j carries almost all the mass; recompute without cancellation.
        double mx = -std::numeric_limits<double>::infinity();
        for (Index t = 0; t < L.cols(); ++t)
          if (t != j && d.pi(i, t) < 1.0) mx = std::max(mx, beta0(t) + L(i, t));
        double acc = 0.0;
        if (std::isfinite(mx))
          for (Index t = 0; t < L.cols(); ++t)
            if (t != j && d.pi(i, t) < 1.0) acc += (1.0 - d.pi(i, t)) * std::exp(beta0(t) + L(i, t) - mx);
        out(i) = std::isfinite(mx) ? mx + std::log(acc) : -std::numeric_limits<double>::infinity();
      }
    }
    return out;
  }

  // Column j of L is about to change from old_col to L.col(j).
  void update_column(Index j, const VectorXd& old_col, const VariationalParams& d, const VectorXd& beta0,
                     const MatrixXd& L) {
    for (Index i = 0; i < L.rows(); ++i) {
      if (!(d.pi(i, j) < 1.0)) continue;
      if (beta0(j) + L(i, j) - shift_(i) > 300.0) {
        rebuild_row(i, d, beta0, L);
        continue;
      }
      const double keep = 1.0 - d.pi(i, j);
      sum_(i) += keep * (std::exp(beta0(j) + L(i, j) - shift_(i)) - std::exp(beta0(j) + old_col(i) - shift_(i)));
    }
  }

 private:
  VectorXd shift_;
  VectorXd sum_;
};

VectorXd solve(const BlockProblem& prob, const VectorXd& start, const FitOptions& opts) {
  return bounded_quasi_newton(prob, start, opts.block_tol, opts.block_max_iter).solution;
}

void set_column_mgf(Index j, VariationalParams& d, const VectorXd& beta0, MatrixXd& L, RowSums& sums) {
  const VectorXd old_col = L.col(j);
  refresh_column(j, d, L);
  sums.update_column(j, old_col, d, beta0, L);
}

// gamma1, gamma2, r, lambda2 for taxon j; updates delta, column j of L and the row sums.
void sweep_column(Index j, const CountMatrix& counts, VariationalParams& d, const VectorXd& beta0,
                  const Hyperparams& hyper, MatrixXd& L, RowSums& sums, const FitOptions& opts) {
  d.gamma1(j) = solve(detail::gamma1_problem(j, d, hyper), VectorXd::Constant(1, d.gamma1(j)), opts)(0);
  d.gamma2(j) = solve(detail::gamma2_problem(j, d, hyper), VectorXd::Constant(1, d.gamma2(j)), opts)(0);
  const VectorXd rest = sums.log_rest(j, d, beta0, L);
  d.r.row(j) = solve(detail::r_problem(j, counts, d, beta0, hyper, rest), d.r.row(j).transpose(), opts).transpose();
  d.lambda2.row(j) =
      solve(detail::lambda2_problem(j, counts, d, beta0, hyper, rest), d.lambda2.row(j).transpose(), opts)
          .transpose();
  set_column_mgf(j, d, beta0, L, sums);
}

// m, sigma2 for sample i; updates delta, row i of L and its row sum.
void sweep_row(Index i, const CountMatrix& counts, VariationalParams& d, const VectorXd& beta0, MatrixXd& L,
               RowSums& sums, const FitOptions& opts) {
  d.m.row(i) = solve(detail::m_problem(i, counts, d, beta0), d.m.row(i).transpose(), opts).transpose();
  d.sigma2.row(i) =
      solve(detail::sigma2_problem(i, counts, d, beta0), d.sigma2.row(i).transpose(), opts).transpose();
  refresh_row(i, d, L);
  sums.rebuild_row(i, d, beta0, L);
}

void block_sweeps(const CountMatrix& counts, VariationalParams& d, const VectorXd& beta0,
                  const Hyperparams& hyper, MatrixXd& L, const FitOptions& opts) {
  const Index n = counts.samples();
  const Index p = counts.taxa();
  RowSums sums;
  sums.rebuild(d, beta0, L);
  if (!opts.jacobi_parallel) {
    for (Index j = 0; j < p; ++j) sweep_column(j, counts, d, beta0, hyper, L, sums, opts);
    for (Index i = 0; i < n; ++i) sweep_row(i, counts, d, beta0, L, sums, opts);
    return;
  }
  // Jacobi: every block sees the stage-start normalizer.
  {
    const VariationalParams frozen = d;
    std::vector<VariationalParams> results(static_cast<size_t>(p));
    parallel_for(static_cast<size_t>(p), opts.threads, [&](size_t t) {
      const Index j = static_cast<Index>(t);
      VariationalParams local = frozen;
      local.gamma1(j) = solve(detail::gamma1_problem(j, local, hyper), VectorXd::Constant(1, local.gamma1(j)), opts)(0);
      local.gamma2(j) = solve(detail::gamma2_problem(j, local, hyper), VectorXd::Constant(1, local.gamma2(j)), opts)(0);
      const VectorXd rest = sums.log_rest(j, frozen, beta0, L);
      local.r.row(j) =
          solve(detail::r_problem(j, counts, local, beta0, hyper, rest), local.r.row(j).transpose(), opts).transpose();
      local.lambda2.row(j) =
          solve(detail::lambda2_problem(j, counts, local, beta0, hyper, rest), local.lambda2.row(j).transpose(), opts)
              .transpose();
      results[t] = std::move(local);
    });
    for (Index j = 0; j < p; ++j) {
      const VariationalParams& res = results[static_cast<size_t>(j)];
      d.gamma1(j) = res.gamma1(j);
      d.gamma2(j) = res.gamma2(j);
      d.r.row(j) = res.r.row(j);
      d.lambda2.row(j) = res.lambda2.row(j);
    }
    L = log_mgf_matrix(d);
  }
  {
    const VariationalParams frozen = d;
    std::vector<std::pair<VectorXd, VectorXd>> results(static_cast<size_t>(n));
    parallel_for(static_cast<size_t>(n), opts.threads, [&](size_t t) {
      const Index i = static_cast<Index>(t);
      VariationalParams local = frozen;
      local.m.row(i) = solve(detail::m_problem(i, counts, local, beta0), local.m.row(i).transpose(), opts).transpose();
      local.sigma2.row(i) =
          solve(detail::sigma2_problem(i, counts, local, beta0), local.sigma2.row(i).transpose(), opts).transpose();
      results[t] = {local.m.row(i).transpose(), local.sigma2.row(i).transpose()};
    });
    for (Index i = 0; i < n; ++i) {
      d.m.row(i) = results[static_cast<size_t>(i)].first.transpose();
      d.sigma2.row(i) = results[static_cast<size_t>(i)].second.transpose();
    }
    L = log_mgf_matrix(d);
  }
}

// A row with every taxon classified as a structural zero gets its
// least-confident cell (smallest pi_hat) switched back on.
void repair_rows(const CountMatrix& counts, const MatrixXd& ph, MatrixXd& pi) {
  for (Index i = 0; i < pi.rows(); ++i) {
    if (!(counts.depths()(i) > 0.0)) continue;
    if ((pi.row(i).array() < 1.0).any()) continue;
    Index at = 0;
    ph.row(i).minCoeff(&at);
    pi(i, at) = 0.0;
  }
}

std::string snapshot(int iter, const VariationalParams& d, const VectorXd& beta0, const ElboBreakdown& e) {
  std::ostringstream os;
  os << "non-finite ELBO at outer iteration " << iter << ": loading_prior=" << e.loading_prior
     << " factor_prior=" << e.factor_prior << " beta_functions=" << e.beta_functions
     << " multinomial=" << e.multinomial << " bernoulli=" << e.bernoulli << " beta_cross=" << e.beta_cross
     << "; max|r|=" << d.r.cwiseAbs().maxCoeff() << " max|m|=" << d.m.cwiseAbs().maxCoeff()
     << " max|beta0|=" << beta0.cwiseAbs().maxCoeff() << " gamma range=[" << std::min(d.gamma1.minCoeff(), d.gamma2.minCoeff())
     << "," << std::max(d.gamma1.maxCoeff(), d.gamma2.maxCoeff()) << "]";
  return os.str();
}

}  // namespace

FitResult fit(const CountMatrix& counts, const Hyperparams& hyper, const FitOptions& opts) {
  opts.validate();
  counts.require_support();
  hyper.validate(counts.taxa());
  if (hyper.sigma_beta.size() != hyper.k) throw ValidationError("sigma_beta must have length k");

  auto [d, beta0] = initialize(counts, hyper, opts.seed);
  MatrixXd L = log_mgf_matrix(d);
  FitResult res;
  double previous = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 1; iter <= opts.max_outer_iter; ++iter) {
    // Classification from the previous iteration's values.
    const MatrixXd ph = pi_hat(counts, d, beta0);
    MatrixXd pi = classify_pi(ph, hyper.pi0);
    repair_rows(counts, ph, pi);
    d.pi = std::move(pi);

    const ElboBreakdown start = elbo_lpnm(counts, d, beta0, hyper);
    if (!std::isfinite(start.total)) throw NumericalError(snapshot(iter, d, beta0, start));
    res.sweep_start_elbo.push_back(start.total);

    block_sweeps(counts, d, beta0, hyper, L, opts);

    beta0 = solve(detail::beta0_problem(counts, d, L), beta0, opts);
    beta0.array() -= beta0.mean();

    const ElboBreakdown after = elbo_lpnm(counts, d, beta0, hyper);
    if (!std::isfinite(after.total)) throw NumericalError(snapshot(iter, d, beta0, after));
    res.elbo_trace.push_back(after.total);
    res.outer_iterations = iter;

    const double reference = iter == 1 ? start.total : previous;
    if (std::abs(after.total - reference) / std::abs(after.total) < opts.elbo_rel_tol) {
      res.converged = true;
      break;
    }
    previous = after.total;
  }

  res.theta_hat.beta0 = beta0;
  res.theta_hat.B = d.r;
  res.theta_hat.eta = estimate_eta(d.gamma1, d.gamma2);
  res.F_hat = d.m;
  res.rho_hat = underlying_compositions(beta0, d.r, d.m);
  res.delta_hat = std::move(d);
  return res;
}

}  // namespace zippca
